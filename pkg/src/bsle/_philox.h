/* Philox4x64-10 counter-based generator and a Box-Muller normal on top of it.
 *
 * Same constants and round structure as the Random123 reference (and numpy's
 * Philox bit generator), so numpy.random.Philox serves as a known-answer oracle.
 */
#ifndef BSLE_PHILOX_H
#define BSLE_PHILOX_H

#include <stdint.h>
#include <math.h>

#define BSLE_PHILOX_M0 0xD2E7470EE14C6C93ULL
#define BSLE_PHILOX_M1 0xCA5A826395121157ULL
#define BSLE_PHILOX_W0 0x9E3779B97F4A7C15ULL
#define BSLE_PHILOX_W1 0xBB67AE8584CAA73BULL
#define BSLE_TWO_PI 6.283185307179586
#define BSLE_INV_2_53 1.1102230246251565e-16

static inline void bsle_mulhilo(uint64_t a, uint64_t b, uint64_t *hi, uint64_t *lo)
{
    unsigned __int128 p = (unsigned __int128)a * (unsigned __int128)b;
    *hi = (uint64_t)(p >> 64);
    *lo = (uint64_t)p;
}

static inline void bsle_philox4x64(const uint64_t ctr_in[4], uint64_t k0, uint64_t k1,
                                   uint64_t out[4])
{
    uint64_t c0 = ctr_in[0], c1 = ctr_in[1], c2 = ctr_in[2], c3 = ctr_in[3];
    uint64_t hi0, lo0, hi1, lo1;
    int r;
    for (r = 0; r < 10; ++r) {
        if (r > 0) {
            k0 += BSLE_PHILOX_W0;
            k1 += BSLE_PHILOX_W1;
        }
        bsle_mulhilo(BSLE_PHILOX_M0, c0, &hi0, &lo0);
        bsle_mulhilo(BSLE_PHILOX_M1, c2, &hi1, &lo1);
        c0 = hi1 ^ c1 ^ k0;
        c1 = lo1;
        c2 = hi0 ^ c3 ^ k1;
        c3 = lo0;
    }
    out[0] = c0; out[1] = c1; out[2] = c2; out[3] = c3;
}

/* Normal pair for counter (pair, block, domain, 0) under key (seed, stream).
 * Node 2m uses the cosine branch, node 2m+1 the sine branch. */
static inline void bsle_normal_pair(uint64_t seed, uint64_t stream, uint64_t domain,
                                    uint64_t block, uint64_t pair,
                                    double *z_cos, double *z_sin)
{
    uint64_t ctr[4], out[4];
    double u1, u2, r, th;
    ctr[0] = pair; ctr[1] = block; ctr[2] = domain; ctr[3] = 0;
    bsle_philox4x64(ctr, seed, stream, out);
    u1 = ((double)(out[0] >> 11) + 0.5) * BSLE_INV_2_53;
    u2 = (double)(out[1] >> 11) * BSLE_INV_2_53;
    r = sqrt(-2.0 * log(u1));
    th = BSLE_TWO_PI * u2;
    *z_cos = r * cos(th);
    *z_sin = r * sin(th);
}

#endif
