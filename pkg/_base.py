# -*- coding: utf-8 -*-
"""Shared persistence for results: every public attribute goes to one HDF5 file."""

import hashlib
import json
import logging
import os
from typing import Any, Dict, Optional

import h5py
import numpy as np
import numpy.typing as npt

log = logging.getLogger(__name__)


class Base:
    """
    Base class for persisted results
    """

    DATA_DIR: str = "data"
    """Default output folder, relative to the working directory, used when no filename is given"""
    JSON_ATTRIBUTES: tuple = ("config", "metadata")
    """Attributes stored as JSON strings instead of native HDF5 attributes"""

    def _save(self, kind: str, save_filename: Optional[str] = None) -> str:
        if save_filename is None:
            save_basename = f"{kind:s}_{self._content_tag():s}.h5"
            save_path = os.path.realpath(os.path.join(self.DATA_DIR, save_basename))
        else:
            save_path = os.path.realpath(save_filename)
        os.makedirs(os.path.dirname(save_path), exist_ok=True)

        with h5py.File(save_path, "w") as h5f:
            for attribute in sorted(self.__dict__):
                value = self.__dict__[attribute]
                try:
                    if attribute.startswith("_"):
                        # don't save private attributes
                        continue
                    if value is None:
                        continue
                    if attribute in self.JSON_ATTRIBUTES or isinstance(value, dict):
                        h5f.attrs[attribute] = json.dumps(value, sort_keys=True)
                    elif np.isscalar(value):
                        h5f.attrs[attribute] = value
                    else:
                        h5f.create_dataset(attribute, data=np.asarray(value), track_times=False)
                except (TypeError, ValueError) as err:
                    log.warning("unable to save %s: %s", attribute, err)
        log.info("Data saved to: %s", save_path)
        return save_path

    def _content_tag(self) -> str:
        # deterministic replacement for a timestamp: names depend only on content
        digest = hashlib.sha256()
        for attribute in sorted(self.__dict__):
            if attribute.startswith("_"):
                continue
            value = self.__dict__[attribute]
            digest.update(attribute.encode())
            if isinstance(value, np.ndarray):
                digest.update(np.ascontiguousarray(value).tobytes())
            else:
                digest.update(repr(value).encode())
        return digest.hexdigest()[:12]


def read_json_attr(h5f: h5py.File, name: str) -> Dict[str, Any]:
    return json.loads(h5f.attrs[name])  # type: ignore


def array_checksum(values: npt.NDArray[Any]) -> str:
    """sha256 of the little-endian bytes of ``values``."""
    arr = np.ascontiguousarray(values)
    if arr.dtype.byteorder == ">":
        arr = arr.byteswap().view(arr.dtype.newbyteorder("<"))
    return hashlib.sha256(arr.tobytes()).hexdigest()


def config_hash(config: Dict[str, Any]) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


class ChecksumError(RuntimeError):
    """Stored checksum does not match the stored data."""
