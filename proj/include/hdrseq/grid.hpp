#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdrseq {

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Planar multi-channel grid, layout [channel][row][col].
template <typename T>
struct Grid {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(int c, int h, int w, T fill = T(0))
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {
        if (c < 0 || h < 0 || w < 0) throw ShapeError("negative grid dimension");
    }

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    bool same_shape(const Grid& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    T& at(int c, int y, int x) { return data[(c * plane()) + static_cast<std::size_t>(y) * width + x]; }
    const T& at(int c, int y, int x) const {
        return data[(c * plane()) + static_cast<std::size_t>(y) * width + x];
    }

    template <typename U>
    Grid<U> cast() const {
        Grid<U> out(channels, height, width);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Frame = Grid<float>;

inline void require_same_shape(const auto& a, const auto& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeError(std::string(what) + ": shape mismatch");
}

}  // namespace hdrseq
