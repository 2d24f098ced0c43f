"""
Export Service

Plot-ready CSV artifacts (UTF-8, header row, '.' decimals, LF line endings)
and the versioned binary ensemble format.

Binary layout: one little-endian header record followed by one record per
path, each record X_0..X_K and, when flags bit 0 is set, eps_1..eps_K, all
as uint64.
"""

import logging
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from ..config import BINARY_FORMAT_VERSION
from ..exceptions import GWIError
from .gw_engine import PathBlock, PathEnsemble

logger = logging.getLogger(__name__)

BINARY_MAGIC = b"GWIE"
FLAG_IMMIGRATION = 1

HEADER_DTYPE = np.dtype([
    ("magic", "S4"),
    ("version", "<u2"),
    ("flags", "<u2"),
    ("config_hash", "S16"),
    ("master_seed", "<u8"),
    ("n_paths", "<u8"),
    ("horizon", "<u8"),
])


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def ensemble_frame(block: PathBlock, m_eps: float) -> pd.DataFrame:
    """
    Long-format rows (path_id, k, x_k[, eps_k], m_k) of a block.

    eps_k and m_k are empty at k = 0.
    """
    n, width = block.x.shape
    k = np.tile(np.arange(width), n)
    x = block.x.astype(np.float64)
    m = np.full(x.shape, np.nan)
    m[:, 1:] = np.diff(x, axis=1) - m_eps

    frame = pd.DataFrame({
        "path_id": np.repeat(block.path_ids, width),
        "k": k,
        "x_k": pd.array(block.x.ravel(), dtype="UInt64"),
    })
    if block.eps is not None:
        padded = np.zeros(x.shape, dtype=np.uint64)
        padded[:, 1:] = block.eps
        eps = pd.array(padded.ravel(), dtype="UInt64")
        eps[k == 0] = pd.NA
        frame["eps_k"] = eps
    frame["m_k"] = m.ravel()
    return frame


class ExportService:
    """Writes simulation artifacts to disk"""

    def write_csv(self, frame: pd.DataFrame, path) -> Path:
        path = _prepare(path)
        frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
        logger.info(f"💾 Wrote {len(frame)} rows to {path}")
        return path

    def write_ensemble_csv(self, ensemble: PathEnsemble, path, m_eps: float) -> Path:
        """Stream every block of the ensemble into one long-format CSV"""
        path = _prepare(path)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            for i, block in enumerate(ensemble.iter_blocks()):
                ensemble_frame(block, m_eps).to_csv(handle, index=False, header=(i == 0), lineterminator="\n")
        logger.info(f"💾 Wrote {ensemble.n_paths} paths (K={ensemble.horizon}) to {path}")
        return path

    def write_ensemble_binary(self, ensemble: PathEnsemble, path) -> Path:
        path = _prepare(path)
        header = np.zeros(1, dtype=HEADER_DTYPE)
        header["magic"] = BINARY_MAGIC
        header["version"] = BINARY_FORMAT_VERSION
        header["flags"] = FLAG_IMMIGRATION if ensemble.config.record_immigration else 0
        header["config_hash"] = ensemble.config.config_hash().encode("ascii")
        header["master_seed"] = ensemble.master_seed
        header["n_paths"] = ensemble.n_paths
        header["horizon"] = ensemble.horizon

        with open(path, "wb") as handle:
            header.tofile(handle)
            for block in ensemble.iter_blocks():
                rows = block.x if block.eps is None else np.concatenate([block.x, block.eps], axis=1)
                rows.astype("<u8", copy=False).tofile(handle)
        logger.info(f"💾 Wrote binary ensemble ({ensemble.n_paths} paths) to {path}")
        return path

    def read_ensemble_binary(self, path) -> Tuple[Dict, PathBlock]:
        """
        Read a binary ensemble back.

        Returns:
            tuple: (header dict, PathBlock with every path)

        Raises:
            GWIError: Bad magic, unsupported version or truncated data
        """
        path = Path(path)
        header = np.fromfile(path, dtype=HEADER_DTYPE, count=1)
        if header.size != 1 or header["magic"][0] != BINARY_MAGIC:
            raise GWIError(f"{path} is not a GWI ensemble file")
        version = int(header["version"][0])
        if version != BINARY_FORMAT_VERSION:
            raise GWIError(f"{path}: unsupported binary version {version}")

        flags = int(header["flags"][0])
        n_paths = int(header["n_paths"][0])
        K = int(header["horizon"][0])
        width = K + 1 + (K if flags & FLAG_IMMIGRATION else 0)

        data = np.fromfile(path, dtype="<u8", offset=HEADER_DTYPE.itemsize)
        if data.size != n_paths * width:
            raise GWIError(f"{path}: expected {n_paths * width} values, found {data.size}")
        rows = data.reshape(n_paths, width).astype(np.uint64)
        eps = rows[:, K + 1:] if flags & FLAG_IMMIGRATION else None

        info = {
            "version": version,
            "flags": flags,
            "config_hash": header["config_hash"][0].decode("ascii"),
            "master_seed": int(header["master_seed"][0]),
            "n_paths": n_paths,
            "horizon_K": K,
        }
        return info, PathBlock(0, rows[:, : K + 1], eps, info["master_seed"])

    def write_endpoints_csv(self, values: np.ndarray, path, lane_offset: int = 0) -> Path:
        values = np.asarray(values, dtype=np.float64)
        frame = pd.DataFrame({"path_id": np.arange(lane_offset, lane_offset + values.size), "value": values})
        return self.write_csv(frame, path)

    def write_paths_csv(self, paths: np.ndarray, T: float, path) -> Path:
        """Long-format (path_id, t, value) rows of a (n, steps+1) path array"""
        n, width = paths.shape
        times = np.linspace(0.0, T, width)
        frame = pd.DataFrame({
            "path_id": np.repeat(np.arange(n), width),
            "t": np.tile(times, n),
            "value": paths.ravel(),
        })
        return self.write_csv(frame, path)


# Global export service instance
export_service = ExportService()
