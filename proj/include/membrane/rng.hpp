#pragma once

#include <cstdint>

#include "membrane/linalg.hpp"

// Deterministic generator used for every random draw in the project. The CSV
// determinism contract (identical config + seed => byte-identical output)
// rules out library distributions whose rounding is implementation defined,
// so uniforms are mapped by hand from splitmix64 words.

namespace membrane {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    Vec2 vec2(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi)}; }
    Vec3 vec3(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }

    Mat32 mat32(double lo, double hi) { return {vec3(lo, hi), vec3(lo, hi)}; }
    Mat33 mat33(double lo, double hi) { return {vec3(lo, hi), vec3(lo, hi), vec3(lo, hi)}; }

    // Uniform-ish random rotation: random axis, random angle.
    Mat33 so3() {
        Vec3 axis;
        do {
            axis = vec3(-1.0, 1.0);
        } while (axis.norm2() < 1e-6 || axis.norm2() > 1.0);
        return rotation(axis, uniform(0.0, 6.283185307179586));
    }

    // Derive an independent stream (for per-task determinism regardless of
    // scheduling).
    Rng fork(std::uint64_t tag) {
        Rng r(state_ ^ (0xda3e39cb94b95bdbULL * (tag + 1)));
        r.next_u64();
        return r;
    }

  private:
    std::uint64_t state_;
};

}  // namespace membrane
