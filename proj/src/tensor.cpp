#include "spikeforge/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spikeforge {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s))
{
	data.assign(shape_numel(shape), 0.0);
}

Tensor Tensor::full(std::vector<std::size_t> s, double value)
{
	Tensor t(std::move(s));
	for (auto &v : t.data) {
		v = value;
	}
	return t;
}

Tensor Tensor::from(std::vector<std::size_t> s, std::vector<double> values)
{
	if (shape_numel(s) != values.size()) {
		throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
		                            " values do not fill shape " + shape_str(s));
	}
	Tensor t;
	t.shape = std::move(s);
	t.data = std::move(values);
	return t;
}

bool Tensor::all_finite() const
{
	for (double v : data) {
		if (!std::isfinite(v)) {
			return false;
		}
	}
	return true;
}

std::size_t shape_numel(const std::vector<std::size_t> &shape)
{
	std::size_t n = 1;
	for (std::size_t d : shape) {
		n *= d;
	}
	return n;
}

std::string shape_str(const std::vector<std::size_t> &shape)
{
	std::ostringstream os;
	os << "[";
	for (std::size_t i = 0; i < shape.size(); i++) {
		if (i) {
			os << ", ";
		}
		os << shape[i];
	}
	os << "]";
	return os.str();
}

}  // namespace spikeforge
