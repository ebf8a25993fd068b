/**
 * Absolute 1-based rank of a clicked result.
 *
 * pageIndex and indexOnPage are 0-based, so the third item of page index 2
 * at page size 20 has absolute rank 43. The service and the click log both
 * work in absolute ranks; the UI must never report on-page positions.
 */
export function absoluteRank(pageIndex: number, pageSize: number, indexOnPage: number): number {
  if (!Number.isInteger(pageIndex) || pageIndex < 0) {
    throw new RangeError(`pageIndex must be a non-negative integer, got ${pageIndex}`);
  }
  if (!Number.isInteger(pageSize) || pageSize < 1) {
    throw new RangeError(`pageSize must be a positive integer, got ${pageSize}`);
  }
  if (!Number.isInteger(indexOnPage) || indexOnPage < 0 || indexOnPage >= pageSize) {
    throw new RangeError(`indexOnPage must lie in [0, pageSize), got ${indexOnPage}`);
  }
  return pageIndex * pageSize + indexOnPage + 1;
}

/** 1-based page parameter the service expects for a 0-based UI page index. */
export function servicePage(pageIndex: number): number {
  return pageIndex + 1;
}
