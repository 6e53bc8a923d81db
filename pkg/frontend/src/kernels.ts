/**
 * Local executors for the registered kernels, used to check voted results
 * against local execution. Same PRNG contract and operation order as the
 * workers, so digests agree across languages (IEEE-754 doubles throughout;
 * the fib kernel is exact integer arithmetic).
 */

const MASK64 = (1n << 64n) - 1n;
const GAMMA = 0x9e3779b97f4a7c15n;
const EARTH_RADIUS_KM = 6371.0088;
const FIB_MOD = 2305843009213693951n; // 2^61 - 1

class SplitMix64 {
  private state: bigint;

  constructor(seed: number | bigint) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + GAMMA) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  nextDouble(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }
}

export function arcDistSum(size: number, seed: number): number {
  const rng = new SplitMix64(seed);
  let total = 0.0;
  for (let i = 0; i < size; i++) {
    const lat1 = rng.nextDouble() * Math.PI - Math.PI / 2.0;
    const lon1 = rng.nextDouble() * (2.0 * Math.PI) - Math.PI;
    const lat2 = rng.nextDouble() * Math.PI - Math.PI / 2.0;
    const lon2 = rng.nextDouble() * (2.0 * Math.PI) - Math.PI;
    const sdlat = Math.sin((lat2 - lat1) / 2.0);
    const sdlon = Math.sin((lon2 - lon1) / 2.0);
    let a = sdlat * sdlat + Math.cos(lat1) * Math.cos(lat2) * sdlon * sdlon;
    if (a > 1.0) a = 1.0;
    total += 2.0 * EARTH_RADIUS_KM * Math.asin(Math.sqrt(a));
  }
  return total;
}

export function rosenSum(size: number, seed: number): number {
  const rng = new SplitMix64(seed);
  let total = 0.0;
  for (let i = 0; i < size; i++) {
    const x = rng.nextDouble() * 4.0 - 2.0;
    const y = rng.nextDouble() * 4.0 - 2.0;
    const t1 = y - x * x;
    const t2 = 1.0 - x;
    total += 100.0 * t1 * t1 + t2 * t2;
  }
  return total;
}

export function fibMod(size: number, seed: number): bigint {
  const rng = new SplitMix64(seed);
  let a = rng.nextU64() % FIB_MOD;
  let b = rng.nextU64() % FIB_MOD;
  for (let i = 0; i < size; i++) {
    const next = (a + b) % FIB_MOD;
    a = b;
    b = next;
  }
  return b;
}

export const LOCAL_KERNELS: Record<string, (size: number, seed: number) => number | bigint> = {
  arc_dist: arcDistSum,
  rosen: rosenSum,
  fib: fibMod,
};
