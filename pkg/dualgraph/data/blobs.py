import os

import numpy as np

from dualgraph.data.types import BlobEntry
from dualgraph.exceptions import MissingBlobError, ShapeMismatchError

_DTYPES = {"f64": np.dtype("<f8"), "u32": np.dtype("<u4")}


def write_blob(directory: str, name: str, array: np.ndarray, dtype: str = "f64") -> BlobEntry:
    """
    Writes `array` as a raw row-major little-endian blob `<name>.bin`.

    Args:
        directory: target directory, must exist
        name: blob name, also the file stem
        array: values to write
        dtype: "f64" or "u32"

    Returns:
        BlobEntry describing the written file
    """
    wire = _DTYPES[dtype]
    array = np.asarray(array)
    if dtype == "u32" and array.size and (array.min() < 0 or array.max() > 0xFFFFFFFF):
        raise ShapeMismatchError(f"blob '{name}' does not fit in u32")
    payload = np.ascontiguousarray(array, dtype=wire).tobytes(order="C")
    with open(os.path.join(directory, f"{name}.bin"), "wb") as f:
        f.write(payload)
    return BlobEntry(
        name=name, shape=list(array.shape), dtype=dtype, byte_length=len(payload)
    )


def read_blob(directory: str, entry: BlobEntry) -> np.ndarray:
    path = os.path.join(directory, f"{entry.name}.bin")
    if not os.path.exists(path):
        raise MissingBlobError(f"missing blob '{entry.name}'", path=path)

    wire = _DTYPES[entry.dtype]
    expected = int(np.prod(entry.shape, dtype=np.int64)) * wire.itemsize
    if entry.byte_length != expected:
        raise ShapeMismatchError(
            f"blob '{entry.name}' declares {entry.byte_length} bytes but shape {entry.shape} needs {expected}",
            path=path,
        )
    actual = os.path.getsize(path)
    if actual != expected:
        raise ShapeMismatchError(
            f"blob '{entry.name}' has {actual} bytes on disk, expected {expected}",
            path=path,
        )

    with open(path, "rb") as f:
        values = np.frombuffer(f.read(), dtype=wire).reshape(entry.shape)

    if entry.dtype == "u32":
        return values.astype(np.int64)
    return values.astype(np.float64)
