export class ShapeMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ShapeMismatch";
  }
}

export class DatasetError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DatasetError";
  }
}

export class CheckpointError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "CheckpointError";
  }
}
