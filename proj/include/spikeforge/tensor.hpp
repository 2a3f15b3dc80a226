#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace spikeforge {

/**
 * @brief Dense real-valued n-dimensional array, row-major.
 *
 * The carrier type for activations, weights and images throughout the
 * toolchain. `data.size()` always equals the product of `shape`.
 */
struct Tensor {
	std::vector<std::size_t> shape;
	std::vector<double> data;

	Tensor() = default;
	explicit Tensor(std::vector<std::size_t> s);

	static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
	static Tensor full(std::vector<std::size_t> s, double value);
	static Tensor from(std::vector<std::size_t> s, std::vector<double> values);

	std::size_t numel() const { return data.size(); }
	std::size_t rank() const { return shape.size(); }

	double &operator[](std::size_t i) { return data[i]; }
	double operator[](std::size_t i) const { return data[i]; }

	// Row-major indexing helpers for the common ranks.
	double &at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
	double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
	double &at(std::size_t c, std::size_t y, std::size_t x)
	{
		return data[(c * shape[1] + y) * shape[2] + x];
	}
	double at(std::size_t c, std::size_t y, std::size_t x) const
	{
		return data[(c * shape[1] + y) * shape[2] + x];
	}
	double &at(std::size_t k, std::size_t c, std::size_t y, std::size_t x)
	{
		return data[((k * shape[1] + c) * shape[2] + y) * shape[3] + x];
	}
	double at(std::size_t k, std::size_t c, std::size_t y, std::size_t x) const
	{
		return data[((k * shape[1] + c) * shape[2] + y) * shape[3] + x];
	}

	bool all_finite() const;
	bool same_shape(const Tensor &other) const { return shape == other.shape; }
};

std::size_t shape_numel(const std::vector<std::size_t> &shape);

/// Formats a shape as e.g. "[2, 5, 5]" for error messages.
std::string shape_str(const std::vector<std::size_t> &shape);

}  // namespace spikeforge
