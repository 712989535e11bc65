#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bimem {

// A D-dimensional feature coordinate vector.
using FeatureVector = std::vector<double>;
// A C-dimensional point on the probability simplex.
using ProbVector = std::vector<double>;
using Category = std::size_t;

inline constexpr double kEqualityTolerance = 1e-9;
inline constexpr double kProbSumTolerance = 1e-6;
inline constexpr double kProbFloor = 1e-12;

// True when every entry is finite and >= 0 and the entries sum to 1 within
// kProbSumTolerance.
bool is_valid_prob(std::span<const double> p) noexcept;

// Softmax with max-subtraction. Throws InvalidArgument on empty or non-finite
// input.
ProbVector softmax(std::span<const double> scores);

// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(std::span<const double> p);

double l1_distance(std::span<const double> a, std::span<const double> b);

// Index of the largest entry; ties go to the lowest index.
Category argmax_label(std::span<const double> values);

// Elementwise product p * w rescaled onto the simplex. Throws
// DegenerateCalibration when every product is zero.
ProbVector reweight_normalize(std::span<const double> p, std::span<const double> w);

ProbVector uniform_prob(std::size_t categories);

}  // namespace bimem
