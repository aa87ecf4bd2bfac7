#pragma once

// Single-level orthonormal Haar transform over planar multi-channel grids.
//
// For each 2x2 block [[a, b], [c, d]] (a top-left, b top-right, c bottom-left):
//   ll = (a + b + c + d) / 2
//   lh = (a + b - c - d) / 2   vertical detail: high-pass across rows
//   hl = (a - b + c - d) / 2   horizontal detail: high-pass across columns
//   hh = (a - b - c + d) / 2
// The synthesis step is the transpose of the analysis step.

#include "hdrseq/grid.hpp"

namespace hdrseq {

template <typename T>
struct SubbandSet {
    Grid<T> ll, lh, hl, hh;

    bool consistent() const {
        return ll.same_shape(lh) && ll.same_shape(hl) && ll.same_shape(hh);
    }
};

template <typename T>
SubbandSet<T> dwt_haar(const Grid<T>& f) {
    if (f.height % 2 != 0 || f.width % 2 != 0) throw ShapeError("dwt_haar: height and width must be even");
    const int h2 = f.height / 2;
    const int w2 = f.width / 2;
    SubbandSet<T> s{Grid<T>(f.channels, h2, w2), Grid<T>(f.channels, h2, w2), Grid<T>(f.channels, h2, w2),
                    Grid<T>(f.channels, h2, w2)};
    const T half = T(0.5);
    for (int c = 0; c < f.channels; ++c) {
        for (int y = 0; y < h2; ++y) {
            for (int x = 0; x < w2; ++x) {
                const T a = f.at(c, 2 * y, 2 * x);
                const T b = f.at(c, 2 * y, 2 * x + 1);
                const T cc = f.at(c, 2 * y + 1, 2 * x);
                const T d = f.at(c, 2 * y + 1, 2 * x + 1);
                s.ll.at(c, y, x) = half * ((a + b) + (cc + d));
                s.lh.at(c, y, x) = half * ((a + b) - (cc + d));
                s.hl.at(c, y, x) = half * ((a - b) + (cc - d));
                s.hh.at(c, y, x) = half * ((a - b) - (cc - d));
            }
        }
    }
    return s;
}

template <typename T>
Grid<T> idwt_haar(const SubbandSet<T>& s) {
    if (!s.consistent()) throw ShapeError("idwt_haar: subband shapes differ");
    const int h2 = s.ll.height;
    const int w2 = s.ll.width;
    Grid<T> f(s.ll.channels, 2 * h2, 2 * w2);
    const T half = T(0.5);
    for (int c = 0; c < f.channels; ++c) {
        for (int y = 0; y < h2; ++y) {
            for (int x = 0; x < w2; ++x) {
                const T ll = s.ll.at(c, y, x);
                const T lh = s.lh.at(c, y, x);
                const T hl = s.hl.at(c, y, x);
                const T hh = s.hh.at(c, y, x);
                f.at(c, 2 * y, 2 * x) = half * ((ll + lh) + (hl + hh));
                f.at(c, 2 * y, 2 * x + 1) = half * ((ll + lh) - (hl + hh));
                f.at(c, 2 * y + 1, 2 * x) = half * ((ll - lh) + (hl - hh));
                f.at(c, 2 * y + 1, 2 * x + 1) = half * ((ll - lh) - (hl - hh));
            }
        }
    }
    return f;
}

}  // namespace hdrseq
