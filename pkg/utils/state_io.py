"""
态文件读写模块
============
密度矩阵文件和幺正组文件的 JSON 读写

密度矩阵文件: {"d": int, "n": int, "re": [...], "im": [...], "label": str?}
幺正组文件:   {"d": int, "n": int, "unitaries": [{"re": [...], "im": [...]}, ...]}
矩阵按行优先展开。d 和 n 必须显式给出，不从矩阵大小推断（64 = 2⁶ = 4³ = 8²）。
浮点数用 Python 的最短往返表示写出，读回后逐位相同。
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from modules.quantum_core import DensityMatrix, LocalUnitarySet, validate_density
from utils.errors import InputValidationError
from utils.logger import get_logger, log_errors

logger = get_logger("mfef.io")

PathLike = Union[str, Path]


def _load_json(path: PathLike) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as e:
        raise InputValidationError(f"文件不存在: {path}", invariant="readable") from e
    except json.JSONDecodeError as e:
        raise InputValidationError(f"JSON 解析失败 ({path}): {e}", invariant="format") from e
    if not isinstance(data, dict):
        raise InputValidationError(f"顶层必须是 JSON 对象: {path}", invariant="format")
    return data


def _dump_json(data: Dict[str, Any], path: PathLike):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False)
            f.write("\n")
    except OSError as e:
        raise InputValidationError(f"无法写入 {path}: {e}", invariant="writable") from e


def _require_int(data: Dict[str, Any], key: str) -> int:
    value = data.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputValidationError(f"字段 '{key}' 必须是整数，得到 {value!r}", invariant="schema")
    return value


def _require_floats(data: Dict[str, Any], key: str, expected: int) -> np.ndarray:
    value = data.get(key)
    if not isinstance(value, list):
        raise InputValidationError(f"字段 '{key}' 必须是数值列表", invariant="schema")
    if len(value) != expected:
        raise InputValidationError(
            f"entry-count mismatch: '{key}' 有 {len(value)} 个条目，需要 {expected}",
            invariant="entry-count")
    try:
        return np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise InputValidationError(f"字段 '{key}' 含非数值条目", invariant="schema") from e


def _flatten(m: np.ndarray) -> Dict[str, List[float]]:
    flat = np.asarray(m, dtype=np.complex128).reshape(-1)
    return {"re": [float(v) for v in flat.real], "im": [float(v) for v in flat.imag]}


@dataclass(frozen=True, eq=False)
class StateFile:
    """密度矩阵文件的内容"""
    d: int
    n: int
    re: np.ndarray
    im: np.ndarray
    label: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StateFile":
        d = _require_int(data, "d")
        n = _require_int(data, "n")
        if d < 2 or n < 2:
            raise InputValidationError(f"需要 d ≥ 2 且 n ≥ 2，得到 d={d}, n={n}", invariant="dimension")
        entries = d ** (2 * n)
        label = data.get("label")
        if label is not None and not isinstance(label, str):
            raise InputValidationError("字段 'label' 必须是字符串", invariant="schema")
        return cls(d, n, _require_floats(data, "re", entries), _require_floats(data, "im", entries), label)

    @classmethod
    def from_density(cls, rho: DensityMatrix, label: Optional[str] = None) -> "StateFile":
        flat = _flatten(rho.mat)
        return cls(rho.d, rho.n, np.array(flat["re"]), np.array(flat["im"]), label)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "d": self.d,
            "n": self.n,
            "re": [float(v) for v in self.re],
            "im": [float(v) for v in self.im],
        }
        if self.label is not None:
            data["label"] = self.label
        return data

    def to_density(self) -> DensityMatrix:
        dim = self.d ** self.n
        return validate_density((self.re + 1j * self.im).reshape(dim, dim), self.d, self.n)


def read_state_file(path: PathLike) -> StateFile:
    return StateFile.from_dict(_load_json(path))


def load_density(path: PathLike) -> DensityMatrix:
    """读取并校验密度矩阵"""
    return read_state_file(path).to_density()


@log_errors(logger, "io")
def write_state_file(rho: DensityMatrix, path: PathLike, label: Optional[str] = None) -> StateFile:
    sf = StateFile.from_density(rho, label)
    _dump_json(sf.to_dict(), path)
    return sf


def unitaries_to_dict(us: LocalUnitarySet) -> Dict[str, Any]:
    return {"d": us.d, "n": us.n, "unitaries": [_flatten(u) for u in us]}


def unitaries_from_dict(data: Dict[str, Any]) -> LocalUnitarySet:
    d = _require_int(data, "d")
    n = _require_int(data, "n")
    items = data.get("unitaries")
    if not isinstance(items, list):
        raise InputValidationError("字段 'unitaries' 必须是列表", invariant="schema")
    if len(items) != n:
        raise InputValidationError(
            f"entry-count mismatch: 需要 {n} 个幺正矩阵，得到 {len(items)}", invariant="entry-count")
    us = []
    for item in items:
        if not isinstance(item, dict):
            raise InputValidationError("幺正矩阵条目必须是 JSON 对象", invariant="schema")
        re = _require_floats(item, "re", d * d)
        im = _require_floats(item, "im", d * d)
        us.append((re + 1j * im).reshape(d, d))
    return LocalUnitarySet(d, n, tuple(us))


def read_unitaries_file(path: PathLike) -> LocalUnitarySet:
    return unitaries_from_dict(_load_json(path))


@log_errors(logger, "io")
def write_unitaries_file(us: LocalUnitarySet, path: PathLike):
    _dump_json(unitaries_to_dict(us), path)


def input_hash(path: PathLike) -> str:
    """文件内容的 sha256"""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
