/** Annotated sources used across the test suite. */

/** Batch arc-distance kernel, submit-ready: params map onto (size, seed). */
export const ARC_DIST_BATCH = `
/**
 * Sum of great-circle distances over seeded random coordinate pairs.
 *
 * @offload arc_dist
 * @param {int} size  number of coordinate pairs
 * @param {int} seed  generator seed
 */
export function arcDistSum(size: number, seed: number): number {
  const MASK64 = (1n << 64n) - 1n;
  let state = BigInt(seed) & MASK64;
  function nextDouble(): number {
    state = (state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    z = z ^ (z >> 31n);
    return Number(z >> 11n) / 2 ** 53;
  }
  let total = 0.0;
  for (let i = 0; i < size; i++) {
    const lat1 = nextDouble() * Math.PI - Math.PI / 2.0;
    const lon1 = nextDouble() * (2.0 * Math.PI) - Math.PI;
    const lat2 = nextDouble() * Math.PI - Math.PI / 2.0;
    const lon2 = nextDouble() * (2.0 * Math.PI) - Math.PI;
    const sdlat = Math.sin((lat2 - lat1) / 2.0);
    const sdlon = Math.sin((lon2 - lon1) / 2.0);
    let a = sdlat * sdlat + Math.cos(lat1) * Math.cos(lat2) * sdlon * sdlon;
    if (a > 1.0) a = 1.0;
    total += 2.0 * 6371.0088 * Math.asin(Math.sqrt(a));
  }
  return total;
}
`;

/** Pointwise arc-distance with four coordinate parameters (parse-only). */
export const ARC_DIST_POINT = `
/**
 * Great-circle distance between two points on a sphere.
 *
 * @offload arc_dist
 * @param {float} lat1  first latitude, radians
 * @param {float} lon1  first longitude, radians
 * @param {float} lat2  second latitude, radians
 * @param {float} lon2  second longitude, radians
 */
function arcDistance(lat1: number, lon1: number, lat2: number, lon2: number): number {
  const sdlat = Math.sin((lat2 - lat1) / 2.0);
  const sdlon = Math.sin((lon2 - lon1) / 2.0);
  const a = sdlat * sdlat + Math.cos(lat1) * Math.cos(lat2) * sdlon * sdlon;
  return 2.0 * 6371.0088 * Math.asin(Math.sqrt(Math.min(1.0, a)));
}
`;

export const UNANNOTATED = `
function plain(x: number): number {
  return x * 2;
}
`;

export const FREE_VARIABLE = `
/**
 * @offload
 * @param {float} x  input
 */
function leaky(x: number): number {
  return x * globalScale;
}
`;

export const UNDECLARED_PARAM = `
/**
 * @offload
 * @param {float} x  input
 */
function partial(x: number, y: number): number {
  return x + y;
}
`;
