/** Shape or content violations in training data. */
export class DataError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DataError";
  }
}

/** Header of a tensor file contradicts the channel-order contract. */
export class ChecksumMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ChecksumMismatch";
  }
}

/** Malformed raster container (bad magic, size, or dtype tag). */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}
