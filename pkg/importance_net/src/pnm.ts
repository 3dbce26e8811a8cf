/**
 * Binary PNM codecs for the engine's wire formats: P6 color images in,
 * P5 grayscale maps out. Sixteen-bit inputs are accepted by keeping the
 * high byte, mirroring the engine's own convention.
 */
import * as fs from "node:fs";

export interface Ppm {
  width: number;
  height: number;
  /** Interleaved RGB, row-major, length = width * height * 3. */
  data: Uint8Array;
}

export interface Pgm {
  width: number;
  height: number;
  /** Row-major samples, length = width * height. */
  data: Uint8Array;
}

interface Header {
  width: number;
  height: number;
  maxval: number;
  offset: number;
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0b || byte === 0x0c;
}

function parseHeader(buf: Buffer, magic: string, path: string): Header {
  if (buf.length < 2 || buf.toString("latin1", 0, 2) !== magic) {
    throw new Error(`${path}: not a ${magic} file`);
  }
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < buf.length && (isSpace(buf[pos]) || buf[pos] === 0x23)) {
      if (buf[pos] === 0x23) {
        while (pos < buf.length && buf[pos] !== 0x0a) pos++;
      } else {
        pos++;
      }
    }
    let start = pos;
    while (pos < buf.length && !isSpace(buf[pos])) pos++;
    if (pos === start) throw new Error(`${path}: truncated header`);
    const value = Number(buf.toString("latin1", start, pos));
    if (!Number.isInteger(value) || value < 0) {
      throw new Error(`${path}: bad header field`);
    }
    fields.push(value);
  }
  pos++; // single whitespace byte separates header from samples
  const [width, height, maxval] = fields;
  if (width < 1 || height < 1) throw new Error(`${path}: degenerate dimensions`);
  if (maxval < 1 || maxval > 65535) throw new Error(`${path}: bad maxval`);
  return { width, height, maxval, offset: pos };
}

function readSamples(buf: Buffer, header: Header, count: number, path: string): Uint8Array {
  const wide = header.maxval > 255;
  const need = count * (wide ? 2 : 1);
  if (buf.length < header.offset + need) throw new Error(`${path}: truncated samples`);
  const out = new Uint8Array(count);
  if (wide) {
    for (let i = 0; i < count; i++) out[i] = buf[header.offset + 2 * i];
  } else {
    out.set(buf.subarray(header.offset, header.offset + count));
  }
  return out;
}

export function decodePpm(path: string): Ppm {
  const buf = fs.readFileSync(path);
  const header = parseHeader(buf, "P6", path);
  const data = readSamples(buf, header, header.width * header.height * 3, path);
  return { width: header.width, height: header.height, data };
}

export function decodePgm(path: string): Pgm {
  const buf = fs.readFileSync(path);
  const header = parseHeader(buf, "P5", path);
  const data = readSamples(buf, header, header.width * header.height, path);
  return { width: header.width, height: header.height, data };
}

export function encodePgm(map: Pgm): Buffer {
  const header = Buffer.from(`P5\n${map.width} ${map.height}\n255\n`, "latin1");
  return Buffer.concat([header, Buffer.from(map.data)]);
}

export function encodePpm(img: Ppm): Buffer {
  const header = Buffer.from(`P6\n${img.width} ${img.height}\n255\n`, "latin1");
  return Buffer.concat([header, Buffer.from(img.data)]);
}

/** Quantize a unit-interval map to 8-bit samples, error at most 1/510 per pixel. */
export function quantizeMap(width: number, height: number, values: ArrayLike<number>): Pgm {
  const data = new Uint8Array(width * height);
  for (let i = 0; i < data.length; i++) {
    const level = Math.round(values[i] * 255);
    data[i] = level < 0 ? 0 : level > 255 ? 255 : level;
  }
  return { width, height, data };
}
