#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcitl {

// Input tensor does not fit a layer. layer_index() is the position in the
// top-level stack, or npos when raised by a bare layer.
class ShapeError : public std::invalid_argument {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit ShapeError(const std::string& what, std::size_t layer = npos)
      : std::invalid_argument(what), layer_(layer) {}

  std::size_t layer_index() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

// Failure inside a named pipeline stage (pretrain, adapt, split, ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace dcitl
