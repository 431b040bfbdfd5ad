#pragma once

// Forward-accumulation scalar: a value together with its partial
// derivatives with respect to a set of named variables. Arithmetic follows
// the sum/product/chain rules exactly.

#include <cmath>
#include <map>

namespace sacost {

class DiffScalar {
public:
    DiffScalar() = default;
    /*implicit*/ DiffScalar(double value) : value_(value) {}

    static DiffScalar variable(int id, double value) {
        DiffScalar x(value);
        x.partials_[id] = 1.0;
        return x;
    }

    double value() const { return value_; }
    double partial(int id) const {
        auto it = partials_.find(id);
        return it == partials_.end() ? 0.0 : it->second;
    }
    const std::map<int, double>& partials() const { return partials_; }

    DiffScalar& operator+=(const DiffScalar& o) {
        value_ += o.value_;
        for (const auto& [id, d] : o.partials_) partials_[id] += d;
        return *this;
    }
    DiffScalar& operator-=(const DiffScalar& o) {
        value_ -= o.value_;
        for (const auto& [id, d] : o.partials_) partials_[id] -= d;
        return *this;
    }
    DiffScalar& operator*=(double s) {
        value_ *= s;
        for (auto& [id, d] : partials_) d *= s;
        return *this;
    }

    friend DiffScalar operator+(DiffScalar a, const DiffScalar& b) { return a += b; }
    friend DiffScalar operator-(DiffScalar a, const DiffScalar& b) { return a -= b; }
    friend DiffScalar operator-(const DiffScalar& a) {
        DiffScalar r(a);
        return r *= -1.0;
    }

    friend DiffScalar operator*(const DiffScalar& a, const DiffScalar& b) {
        DiffScalar r(a.value_ * b.value_);
        for (const auto& [id, d] : a.partials_) r.partials_[id] += d * b.value_;
        for (const auto& [id, d] : b.partials_) r.partials_[id] += a.value_ * d;
        return r;
    }
    friend DiffScalar operator*(DiffScalar a, double s) { return a *= s; }
    friend DiffScalar operator*(double s, DiffScalar a) { return a *= s; }

    friend DiffScalar operator/(const DiffScalar& a, const DiffScalar& b) {
        DiffScalar r(a.value_ / b.value_);
        const double inv = 1.0 / b.value_;
        const double inv2 = inv * inv;
        for (const auto& [id, d] : a.partials_) r.partials_[id] += d * inv;
        for (const auto& [id, d] : b.partials_) r.partials_[id] -= a.value_ * d * inv2;
        return r;
    }
    friend DiffScalar operator/(DiffScalar a, double s) { return a *= (1.0 / s); }

    friend DiffScalar exp(const DiffScalar& a) {
        DiffScalar r(std::exp(a.value_));
        for (const auto& [id, d] : a.partials_) r.partials_[id] = r.value_ * d;
        return r;
    }

    // a^p for real exponent p (a > 0).
    friend DiffScalar pow(const DiffScalar& a, double p) {
        DiffScalar r(std::pow(a.value_, p));
        const double factor = p * std::pow(a.value_, p - 1.0);
        for (const auto& [id, d] : a.partials_) r.partials_[id] = factor * d;
        return r;
    }

private:
    double value_ = 0.0;
    std::map<int, double> partials_;
};

} // namespace sacost
