#pragma once

#include <cstddef>
#include <cstdint>

namespace entryexit {

/// Philox4x32-10 counter-based generator. Each (seed, stream) pair yields
/// an independent stream whose output depends only on its counter, so
/// per-path streams are reproducible no matter how paths are scheduled
/// across workers.
class Philox4x32 {
public:
    Philox4x32(uint64_t seed, uint64_t stream)
        : key0_(static_cast<uint32_t>(seed)),
          key1_(static_cast<uint32_t>(seed >> 32)),
          hi_(stream) {}

    void fill_u64(uint64_t* out, size_t n) {
        size_t i = 0;
        for (; i + 2 <= n; i += 2) block(out + i);
        if (i < n) {
            uint64_t tmp[2];
            block(tmp);
            out[i] = tmp[0];
        }
    }

    uint64_t next_u64() {
        if (idx_ >= 2) {
            block(buf_);
            idx_ = 0;
        }
        return buf_[idx_++];
    }

    /// Uniform in the open interval (0, 1).
    double next_uniform() { return to_unit(next_u64()); }

    static double to_unit(uint64_t u) {
        return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    static void round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3,
                      uint32_t k0, uint32_t k1) {
        const uint64_t m0 = static_cast<uint64_t>(0xD2511F53u) * c0;
        const uint64_t m1 = static_cast<uint64_t>(0xCD9E8D57u) * c2;
        const uint32_t n0 = static_cast<uint32_t>(m1 >> 32) ^ c1 ^ k0;
        const uint32_t n1 = static_cast<uint32_t>(m1);
        const uint32_t n2 = static_cast<uint32_t>(m0 >> 32) ^ c3 ^ k1;
        const uint32_t n3 = static_cast<uint32_t>(m0);
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
    }

    void block(uint64_t out[2]) {
        uint32_t c0 = static_cast<uint32_t>(lo_);
        uint32_t c1 = static_cast<uint32_t>(lo_ >> 32);
        uint32_t c2 = static_cast<uint32_t>(hi_);
        uint32_t c3 = static_cast<uint32_t>(hi_ >> 32);
        uint32_t k0 = key0_, k1 = key1_;
        for (int i = 0; i < 10; ++i) {
            round(c0, c1, c2, c3, k0, k1);
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out[0] = (static_cast<uint64_t>(c1) << 32) | c0;
        out[1] = (static_cast<uint64_t>(c3) << 32) | c2;
        ++lo_;
    }

    uint32_t key0_, key1_;
    uint64_t hi_;
    uint64_t lo_ = 0;
    uint64_t buf_[2] = {0, 0};
    unsigned idx_ = 2;
};

}  // namespace entryexit
