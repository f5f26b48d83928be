#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcv {

/// Raised when tensor extents do not line up (channel mismatch, bad split
/// sizes, non-broadcastable gate, ...).
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a configuration value is illegal (partition ratio not
/// divisible, even kernel with same padding, bad CLI flag combinations, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Extents of a rank-5 video tensor: [batch, time, height, width, channels].
struct Shape {
    std::int64_t n{1}, t{1}, h{1}, w{1}, c{1};

    std::int64_t numel() const { return n * t * h * w * c; }

    bool operator==(const Shape&) const = default;

    std::string str() const {
        return "[" + std::to_string(n) + "," + std::to_string(t) + "," +
               std::to_string(h) + "," + std::to_string(w) + "," +
               std::to_string(c) + "]";
    }
};

/// Dense rank-5 tensor, row-major with channels fastest. The optional grad
/// buffer always has the same extents as data.
template <typename T>
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(Shape s) : shape(s), data(check(s), T(0)) {}

    Tensor(Shape s, std::vector<T> values) : shape(s), data(std::move(values)) {
        if (static_cast<std::int64_t>(data.size()) != check(s))
            throw DimensionError("tensor data length does not match shape " + s.str());
    }

    static Tensor full(Shape s, T value) {
        Tensor out(s);
        std::fill(out.data.begin(), out.data.end(), value);
        return out;
    }

    Shape shape{};
    std::vector<T> data;
    std::optional<std::vector<T>> grad;

    std::int64_t numel() const { return shape.numel(); }

    std::int64_t index(std::int64_t n, std::int64_t t, std::int64_t h,
                       std::int64_t w, std::int64_t c) const {
        return (((n * shape.t + t) * shape.h + h) * shape.w + w) * shape.c + c;
    }

    T& at(std::int64_t n, std::int64_t t, std::int64_t h, std::int64_t w,
          std::int64_t c) {
        return data[index(n, t, h, w, c)];
    }
    const T& at(std::int64_t n, std::int64_t t, std::int64_t h, std::int64_t w,
                std::int64_t c) const {
        return data[index(n, t, h, w, c)];
    }

    void ensure_grad() {
        if (!grad) grad.emplace(data.size(), T(0));
        if (grad->size() != data.size())
            throw DimensionError("grad buffer shape differs from data");
    }

  private:
    static std::int64_t check(const Shape& s) {
        if (s.n < 1 || s.t < 1 || s.h < 1 || s.w < 1 || s.c < 1)
            throw DimensionError("all tensor extents must be >= 1, got " + s.str());
        return s.numel();
    }
};

} // namespace gcv
