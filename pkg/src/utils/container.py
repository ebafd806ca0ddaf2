"""
바이너리 컨테이너 코덱

장면 파일(BARC1)과 체크포인트가 공유하는 2단 구조:
매직 라인, 한 줄짜리 JSON 헤더, 헤더의 blocks 순서대로 이어지는 little-endian raw payload.
"""

import json
from typing import Any

import numpy as np

from src.utils.errors import FormatError

# 헤더 dtype 이름 -> numpy dtype
DTYPES: dict[str, str] = {
    "f32le": "<f4",
    "f64le": "<f8",
    "u8": "u1",
    "i64le": "<i8",
}


def dtype_name(array: np.ndarray) -> str:
    """numpy 배열에 대응하는 헤더 dtype 이름"""
    for name, code in DTYPES.items():
        if np.dtype(code) == array.dtype.newbyteorder("<"):
            return name
    raise FormatError(f"unsupported array dtype {array.dtype}")


def encode(magic: bytes, header: dict[str, Any], blocks: list[tuple[str, np.ndarray]]) -> bytes:
    """
    헤더와 블록 목록을 바이트열로 직렬화합니다.

    Args:
        magic: 매직 문자열 (개행 제외)
        header: JSON 직렬화 가능한 헤더 필드
        blocks: (이름, 배열) 목록, 파일에 기록되는 순서

    Returns:
        직렬화된 바이트열
    """
    full_header = dict(header)
    full_header["blocks"] = [
        {"name": name, "dtype": dtype_name(array), "shape": list(array.shape)}
        for name, array in blocks
    ]
    head = json.dumps(full_header, sort_keys=True, separators=(",", ":"), allow_nan=False)
    parts = [magic + b"\n", head.encode("utf-8") + b"\n"]
    for _, array in blocks:
        code = DTYPES[dtype_name(array)]
        parts.append(np.ascontiguousarray(array, dtype=code).tobytes())
    return b"".join(parts)


def decode(
    magic: bytes, payload: bytes
) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """
    encode의 역연산. 어떤 불일치든 부분 결과 없이 FormatError를 발생시킵니다.

    Returns:
        (헤더 dict, {블록 이름: 배열}) 튜플
    """
    if not payload.startswith(magic + b"\n"):
        raise FormatError(f"bad magic, expected {magic.decode()!r}", offset=0)
    pos = len(magic) + 1

    end = payload.find(b"\n", pos)
    if end < 0:
        raise FormatError("unterminated header", offset=pos)
    try:
        header = json.loads(payload[pos:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"header is not valid JSON: {exc}", offset=pos) from exc
    if not isinstance(header, dict) or not isinstance(header.get("blocks"), list):
        raise FormatError("header has no block table", offset=pos)
    pos = end + 1

    arrays: dict[str, np.ndarray] = {}
    for block in header["blocks"]:
        try:
            name = str(block["name"])
            code = DTYPES[block["dtype"]]
            shape = tuple(int(s) for s in block["shape"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed block entry {block!r}", offset=pos) from exc
        if any(s < 0 for s in shape):
            raise FormatError(f"negative extent in block {name!r}", offset=pos)

        nbytes = int(np.prod(shape, dtype=np.int64)) * np.dtype(code).itemsize
        if pos + nbytes > len(payload):
            raise FormatError(
                f"truncated payload in block {name!r}: need {nbytes} bytes, "
                f"have {len(payload) - pos}",
                offset=pos,
            )
        count = nbytes // np.dtype(code).itemsize
        raw = np.frombuffer(payload, dtype=code, count=count, offset=pos)
        arrays[name] = raw.reshape(shape).astype(np.dtype(code).newbyteorder("="), copy=True)
        pos += nbytes

    if pos != len(payload):
        raise FormatError(f"{len(payload) - pos} trailing bytes after last block", offset=pos)

    header.pop("blocks")
    return header, arrays
