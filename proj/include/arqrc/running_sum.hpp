#pragma once

namespace arqrc {

/// Double-double accumulator.  Running sums grow without bound while the
/// quantities read back from them are differences of consecutive values, so
/// the low word keeps those differences exact to double precision.
class running_sum {
 public:
  running_sum() = default;

  void add(double v) {
    const double s = hi_ + v;
    const double bb = s - hi_;
    const double err = (hi_ - (s - bb)) + (v - bb);
    const double lo = lo_ + err;
    hi_ = s + lo;
    lo_ = lo - (hi_ - s);
  }

  double value() const { return hi_ + lo_; }

  /// a - b, evaluated word by word.
  friend double operator-(const running_sum& a, const running_sum& b) { return (a.hi_ - b.hi_) + (a.lo_ - b.lo_); }

 private:
  double hi_ = 0.0;
  double lo_ = 0.0;
};

}  // namespace arqrc
