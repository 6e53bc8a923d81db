# cython: language_level=3
"""Compiled twin of _kernels_py. Must stay bit-identical with the fallback:
same operation order, same libm functions, no fused multiply-add (the build
passes -ffp-contract=off)."""

from libc.math cimport asin, cos, sin, sqrt
from libc.stdint cimport uint64_t

BACKEND = "cython"

cdef double PI = 3.141592653589793
cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double EARTH_RADIUS_KM = 6371.0088
cdef uint64_t SPLITMIX_GAMMA = 0x9E3779B97F4A7C15ULL
cdef uint64_t FIB_MOD = 2305843009213693951ULL


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _next_u64(uint64_t *state) nogil:
    state[0] = state[0] + SPLITMIX_GAMMA
    return _mix(state[0])


cdef inline double _next_double(uint64_t *state) nogil:
    return <double>(_next_u64(state) >> 11) * INV_2_53


def arc_dist_sum(long long size, unsigned long long seed):
    cdef uint64_t state = <uint64_t>seed
    cdef double total = 0.0
    cdef double lat1, lon1, lat2, lon2, sdlat, sdlon, a
    cdef long long i
    for i in range(size):
        lat1 = _next_double(&state) * PI - PI / 2.0
        lon1 = _next_double(&state) * (2.0 * PI) - PI
        lat2 = _next_double(&state) * PI - PI / 2.0
        lon2 = _next_double(&state) * (2.0 * PI) - PI
        sdlat = sin((lat2 - lat1) / 2.0)
        sdlon = sin((lon2 - lon1) / 2.0)
        a = sdlat * sdlat + cos(lat1) * cos(lat2) * sdlon * sdlon
        if a > 1.0:
            a = 1.0
        total += 2.0 * EARTH_RADIUS_KM * asin(sqrt(a))
    return total


def rosen_sum(long long size, unsigned long long seed):
    cdef uint64_t state = <uint64_t>seed
    cdef double total = 0.0
    cdef double x, y, t1, t2
    cdef long long i
    for i in range(size):
        x = _next_double(&state) * 4.0 - 2.0
        y = _next_double(&state) * 4.0 - 2.0
        t1 = y - x * x
        t2 = 1.0 - x
        total += 100.0 * t1 * t1 + t2 * t2
    return total


def fib_mod(long long size, unsigned long long seed):
    cdef uint64_t state = <uint64_t>seed
    cdef uint64_t a = _next_u64(&state) % FIB_MOD
    cdef uint64_t b = _next_u64(&state) % FIB_MOD
    cdef uint64_t tmp
    cdef long long i
    for i in range(size):
        tmp = (a + b) % FIB_MOD
        a = b
        b = tmp
    return b
