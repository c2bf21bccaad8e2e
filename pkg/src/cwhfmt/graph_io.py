"""Versioned on-disk container for precomputed graph data.

Binary layout (all little-endian):

    bytes 0..7    magic  b"CWHFMTPG"
    bytes 8..11   format version, uint32
    bytes 12..75  scenario fingerprint, 64 ascii hex chars (sha256)
    bytes 76..83  header length H, uint64
    H bytes       header JSON (utf-8): global fields and per-leg array shapes
    ...           raw arrays, concatenated in header order: per leg
                  samples <f8, pair_i <i8, pair_j <i8, cost <f8, T <f8,
                  dv1 <f8, dv2 <f8, cam_theta <f8, cam_Th <f8, cam_dv <f8,
                  cam_post <f8

Loaders reject magic/version mismatches and, given a scenario, fingerprint
mismatches.  A plain-text JSON twin (same content, nested lists) can be
written next to the binary for debugging.  Writing is deterministic: equal
inputs produce byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .planner import LegData, PrecomputedGraphData
from .reachability import NeighborSets

MAGIC = b"CWHFMTPG"
FORMAT_VERSION = 1

_LEG_ARRAYS = [
    ("samples", "<f8", 2),
    ("pair_i", "<i8", 1),
    ("pair_j", "<i8", 1),
    ("cost", "<f8", 1),
    ("T", "<f8", 1),
    ("dv1", "<f8", 2),
    ("dv2", "<f8", 2),
    ("cam_theta", "<f8", 1),
    ("cam_Th", "<f8", 1),
    ("cam_dv", "<f8", 2),
    ("cam_post", "<f8", 2),
]


class GraphDataError(Exception):
    pass


def _leg_arrays(leg: LegData):
    nb = leg.neighbors
    return {
        "samples": leg.samples,
        "pair_i": nb.pair_i,
        "pair_j": nb.pair_j,
        "cost": nb.cost,
        "T": nb.T,
        "dv1": nb.dv1,
        "dv2": nb.dv2,
        "cam_theta": leg.cam_theta,
        "cam_Th": leg.cam_Th,
        "cam_dv": leg.cam_dv,
        "cam_post": leg.cam_post,
    }


def save_binary(data: PrecomputedGraphData, path) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "scenario_fingerprint": data.fingerprint,
        "omega": data.omega,
        "j_bar": data.j_bar,
        "legs": [],
    }
    blobs = []
    for leg in data.legs:
        arrays = _leg_arrays(leg)
        shapes = {}
        for name, dtype, _ in _LEG_ARRAYS:
            arr = np.ascontiguousarray(arrays[name]).astype(dtype)
            shapes[name] = list(arr.shape)
            blobs.append(arr.tobytes())
        header["legs"].append({"n": leg.n, "n_goal": leg.n_goal, "shapes": shapes})
    hdr = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.array(FORMAT_VERSION, dtype="<u4").tobytes())
        fh.write(data.fingerprint.encode("ascii"))
        fh.write(np.array(len(hdr), dtype="<u8").tobytes())
        fh.write(hdr)
        for blob in blobs:
            fh.write(blob)


def save_json_twin(data: PrecomputedGraphData, path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "scenario_fingerprint": data.fingerprint,
        "omega": data.omega,
        "j_bar": data.j_bar,
        "legs": [],
    }
    for leg in data.legs:
        arrays = _leg_arrays(leg)
        doc["legs"].append(
            {
                "n": leg.n,
                "n_goal": leg.n_goal,
                **{name: np.asarray(arrays[name]).tolist() for name, _, _ in _LEG_ARRAYS},
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_binary(path, expected_fingerprint=None) -> PrecomputedGraphData:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise GraphDataError("not a precomputed-graph file (bad magic)")
    version = int(np.frombuffer(raw[8:12], dtype="<u4")[0])
    if version != FORMAT_VERSION:
        raise GraphDataError(f"unsupported format version {version}")
    fingerprint = raw[12:76].decode("ascii")
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise GraphDataError(
            "scenario fingerprint mismatch: data was precomputed for a different scenario"
        )
    hlen = int(np.frombuffer(raw[76:84], dtype="<u8")[0])
    header = json.loads(raw[84 : 84 + hlen].decode("utf-8"))
    off = 84 + hlen
    legs = []
    for meta in header["legs"]:
        arrays = {}
        for name, dtype, _ in _LEG_ARRAYS:
            shape = tuple(meta["shapes"][name])
            count = int(np.prod(shape)) if shape else 1
            itemsize = np.dtype(dtype).itemsize
            arr = np.frombuffer(raw, dtype=dtype, count=count, offset=off).reshape(shape)
            off += count * itemsize
            arrays[name] = arr.astype(dtype.replace("<", "="))
        n_total = arrays["samples"].shape[0]
        nb = NeighborSets(
            n=n_total,
            j_bar=header["j_bar"],
            pair_i=arrays["pair_i"],
            pair_j=arrays["pair_j"],
            cost=arrays["cost"],
            T=arrays["T"],
            dv1=arrays["dv1"],
            dv2=arrays["dv2"],
        )
        nb.fwd = [arrays["pair_j"][arrays["pair_i"] == i].tolist() for i in range(n_total)]
        nb.bwd = [arrays["pair_i"][arrays["pair_j"] == j].tolist() for j in range(n_total)]
        legs.append(
            LegData(
                samples=arrays["samples"],
                n=int(meta["n"]),
                n_goal=int(meta["n_goal"]),
                neighbors=nb,
                cam_theta=arrays["cam_theta"],
                cam_Th=arrays["cam_Th"],
                cam_dv=arrays["cam_dv"],
                cam_post=arrays["cam_post"],
            )
        )
    return PrecomputedGraphData(
        fingerprint=fingerprint,
        omega=float(header["omega"]),
        j_bar=float(header["j_bar"]),
        legs=legs,
    )
