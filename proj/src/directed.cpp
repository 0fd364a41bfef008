// Directed-rounding primitives. This TU is compiled with -frounding-math and
// low optimization so the compiler neither constant-folds nor reorders the
// arithmetic across the rounding-mode switches.
#include <cfenv>

namespace noble::detail {

namespace {
struct RoundGuard {
  int old;
  explicit RoundGuard(int mode) : old(fegetround()) { fesetround(mode); }
  ~RoundGuard() { fesetround(old); }
};
}  // namespace

double dir_add(double a, double b, bool up) noexcept {
  RoundGuard g(up ? FE_UPWARD : FE_DOWNWARD);
  volatile double r = a + b;
  return r;
}
double dir_sub(double a, double b, bool up) noexcept {
  RoundGuard g(up ? FE_UPWARD : FE_DOWNWARD);
  volatile double r = a - b;
  return r;
}
double dir_mul(double a, double b, bool up) noexcept {
  RoundGuard g(up ? FE_UPWARD : FE_DOWNWARD);
  volatile double r = a * b;
  return r;
}
double dir_div(double a, double b, bool up) noexcept {
  RoundGuard g(up ? FE_UPWARD : FE_DOWNWARD);
  volatile double r = a / b;
  return r;
}

}  // namespace noble::detail
