#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace dgdflow {

/// Adaptive Simpson quadrature of f on [a, b].
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 40);

/// Monotone root solve: returns x in [lo, hi] with f(x) = target.
/// f must be strictly increasing; bisection with Newton acceleration when
/// a derivative is supplied.
double invert_monotone(const std::function<double(double)>& f, double target, double lo,
                       double hi, double tol = 1e-12,
                       const std::function<double(double)>& df = nullptr);

/// splitmix64 step; used to derive independent per-trial RNG seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for trial `index` derived from a base seed (thread-order independent).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// FNV-1a 64-bit hash of a byte string, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace dgdflow
