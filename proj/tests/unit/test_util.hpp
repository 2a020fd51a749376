#pragma once

#include <random>

#include "reflex/image.hpp"

namespace reflex::fixtures {

inline Image random_image(int h, int w, int c, std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    Image img(h, w, c);
    for (float& v : img.data()) v = u(rng);
    return img;
}

inline BinaryEdgeMask random_mask(int h, int w, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution b(p);
    BinaryEdgeMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(y, x, b(rng));
    return m;
}

/// Vertical step: columns >= split take `hi`, others `lo`, on every channel.
inline Image step_image(int h, int w, int c, int split, float lo = 0.0f, float hi = 1.0f) {
    Image img(h, w, c, lo);
    for (int y = 0; y < h; ++y)
        for (int x = split; x < w; ++x)
            for (int k = 0; k < c; ++k) img.at(y, x, k) = hi;
    return img;
}

}  // namespace reflex::fixtures
