import { readFileSync, renameSync, writeFileSync } from "node:fs";

import { FormatError } from "./errors.js";

/**
 * Multi-plane raster container shared with the reconstruction pipeline.
 *
 * Layout (little-endian): a 32-byte base header
 * `magic "HSF1" | dtype u32 | width u32 | height u32 | pitch f64 |
 * wavelength f64`, a 32-byte plane extension
 * `channels u32 | reserved u32 | wavelength f64 x3`, then the payload as
 * row-major float64 with all channels of a pixel adjacent. Only the
 * multi-plane tag (3) is handled here; holograms and complex fields use
 * tags this trainer never touches.
 */

const MAGIC = "HSF1";
const DTYPE_PLANES = 3;
const HEADER_BYTES = 32;
const EXT_BYTES = 32;

export interface TensorFile {
  /** Row-major, channel-fastest samples, length height*width*channels. */
  data: Float64Array;
  height: number;
  width: number;
  channels: number;
  pitch: number;
  wavelengths: [number, number, number];
}

export function readTensorFile(path: string): TensorFile {
  const blob = readFileSync(path);
  if (blob.length < HEADER_BYTES) {
    throw new FormatError(`${path}: truncated header (${blob.length} bytes)`);
  }
  const magic = blob.toString("ascii", 0, 4);
  if (magic !== MAGIC) {
    throw new FormatError(`${path}: bad magic ${JSON.stringify(magic)}`);
  }
  const dtype = blob.readUInt32LE(4);
  const width = blob.readUInt32LE(8);
  const height = blob.readUInt32LE(12);
  const pitch = blob.readDoubleLE(16);
  if (dtype !== DTYPE_PLANES) {
    throw new FormatError(`${path}: dtype tag ${dtype} is not a multi-plane file`);
  }
  if (width < 1 || height < 1) {
    throw new FormatError(`${path}: degenerate dimensions ${width}x${height}`);
  }
  if (!(pitch > 0)) {
    throw new FormatError(`${path}: nonpositive pitch ${pitch}`);
  }
  if (blob.length < HEADER_BYTES + EXT_BYTES) {
    throw new FormatError(`${path}: truncated plane extension header`);
  }
  const channels = blob.readUInt32LE(HEADER_BYTES);
  const wavelengths: [number, number, number] = [
    blob.readDoubleLE(HEADER_BYTES + 8),
    blob.readDoubleLE(HEADER_BYTES + 16),
    blob.readDoubleLE(HEADER_BYTES + 24),
  ];
  if (channels < 1) {
    throw new FormatError(`${path}: nonpositive channel count ${channels}`);
  }
  const expected = height * width * channels * 8;
  const body = blob.subarray(HEADER_BYTES + EXT_BYTES);
  if (body.length !== expected) {
    throw new FormatError(
      `${path}: payload is ${body.length} bytes, header implies ${expected}`,
    );
  }
  // Copy out of the node Buffer so the typed array owns aligned memory.
  const data = new Float64Array(height * width * channels);
  for (let k = 0; k < data.length; k++) data[k] = body.readDoubleLE(k * 8);
  return { data, height, width, channels, pitch, wavelengths };
}

export function writeTensorFile(path: string, t: TensorFile): void {
  const { data, height, width, channels, pitch, wavelengths } = t;
  if (height < 1 || width < 1 || channels < 1) {
    throw new FormatError(`refusing degenerate dimensions ${height}x${width}x${channels}`);
  }
  if (data.length !== height * width * channels) {
    throw new FormatError(
      `payload length ${data.length} does not match ${height}x${width}x${channels}`,
    );
  }
  const header = Buffer.alloc(HEADER_BYTES + EXT_BYTES);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(DTYPE_PLANES, 4);
  header.writeUInt32LE(width, 8);
  header.writeUInt32LE(height, 12);
  header.writeDoubleLE(pitch, 16);
  header.writeDoubleLE(0, 24);
  header.writeUInt32LE(channels, HEADER_BYTES);
  header.writeUInt32LE(0, HEADER_BYTES + 4);
  header.writeDoubleLE(wavelengths[0], HEADER_BYTES + 8);
  header.writeDoubleLE(wavelengths[1], HEADER_BYTES + 16);
  header.writeDoubleLE(wavelengths[2], HEADER_BYTES + 24);
  const body = Buffer.alloc(data.length * 8);
  for (let k = 0; k < data.length; k++) body.writeDoubleLE(data[k], k * 8);
  // write-temp-then-rename so readers never observe a half-written file
  const tmp = `${path}.tmp-${process.pid}`;
  writeFileSync(tmp, Buffer.concat([header, body]));
  renameSync(tmp, path);
}
