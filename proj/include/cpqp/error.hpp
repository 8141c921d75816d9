#pragma once

#include <stdexcept>
#include <string>

namespace cpqp {

enum class Errc {
  dimension_mismatch,
  invalid_argument,
  non_finite,
  singular,
  rank_deficient,
  not_complementary,
  parse_error,
  unsupported,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

namespace detail {

inline void require(bool cond, Errc code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace detail
}  // namespace cpqp
