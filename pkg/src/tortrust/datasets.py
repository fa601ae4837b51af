"""Normalized input datasets: consensus, AS paths, clusters, geo, uptime.

Raw-format ingestion (CAIDA, RouteViews, MaxMind, consensus documents)
happens upstream; this module only defines the normalized record shapes
and reads/writes them as JSON-lines files inside a bundle directory:

    consensus.jsonl     one relay per line
    as_paths.jsonl      one directed AS-level path per line
    as_clusters.jsonl   one AS organization per line
    ixp_clusters.jsonl  one IXP organization per line
    geo.jsonl           one located entity per line ("relay:<fp>", "ixp:<id>")
    uptime.jsonl        one consensus epoch per line, listing Running relays
"""

import json
import os
from dataclasses import dataclass, field

from .errors import DatasetError


@dataclass(frozen=True)
class RelayRecord:
    fingerprint: str
    as_number: int
    guard: bool = False
    exit: bool = False
    bandwidth: int = 0
    family: tuple = ()
    os: str = ""
    ip: str = ""


@dataclass(frozen=True)
class PathRecord:
    src: int
    dst: int
    as_path: tuple = ()
    ixps: tuple = ()


@dataclass(frozen=True)
class ClusterRecord:
    org: str
    members: tuple = ()


@dataclass(frozen=True)
class GeoRecord:
    entity: str
    country: str
    lat: float = 0.0
    lon: float = 0.0


@dataclass(frozen=True)
class UptimeRecord:
    epoch: int
    running: tuple = ()


@dataclass(frozen=True)
class DatasetBundle:
    consensus: tuple = ()
    as_paths: tuple = ()
    as_clusters: tuple = ()
    ixp_clusters: tuple = ()
    geo: tuple = ()
    uptime: tuple = ()

    def check(self):
        """Raise DatasetError on internal inconsistencies."""
        fps = [r.fingerprint for r in self.consensus]
        if len(fps) != len(set(fps)):
            raise DatasetError("duplicate relay fingerprints in consensus")
        for rec in self.consensus:
            if not rec.fingerprint:
                raise DatasetError("relay with empty fingerprint")


_FILES = {
    "consensus": "consensus.jsonl",
    "as_paths": "as_paths.jsonl",
    "as_clusters": "as_clusters.jsonl",
    "ixp_clusters": "ixp_clusters.jsonl",
    "geo": "geo.jsonl",
    "uptime": "uptime.jsonl",
}


def _relay_to_json(r):
    return {"fingerprint": r.fingerprint, "as_number": r.as_number,
            "guard": r.guard, "exit": r.exit, "bandwidth": r.bandwidth,
            "family": list(r.family), "os": r.os, "ip": r.ip}


def _relay_from_json(d):
    return RelayRecord(fingerprint=d["fingerprint"], as_number=d["as_number"],
                       guard=d.get("guard", False), exit=d.get("exit", False),
                       bandwidth=d.get("bandwidth", 0),
                       family=tuple(d.get("family", [])),
                       os=d.get("os", ""), ip=d.get("ip", ""))


def _path_to_json(p):
    return {"src": p.src, "dst": p.dst, "as_path": list(p.as_path),
            "ixps": list(p.ixps)}


def _path_from_json(d):
    return PathRecord(src=d["src"], dst=d["dst"],
                      as_path=tuple(d.get("as_path", [])),
                      ixps=tuple(d.get("ixps", [])))


def _cluster_to_json(c):
    return {"org": c.org, "members": list(c.members)}


def _cluster_from_json(d):
    return ClusterRecord(org=d["org"], members=tuple(d.get("members", [])))


def _geo_to_json(g):
    return {"entity": g.entity, "country": g.country, "lat": g.lat, "lon": g.lon}


def _geo_from_json(d):
    return GeoRecord(entity=d["entity"], country=d["country"],
                     lat=d.get("lat", 0.0), lon=d.get("lon", 0.0))


def _uptime_to_json(u):
    return {"epoch": u.epoch, "running": list(u.running)}


def _uptime_from_json(d):
    return UptimeRecord(epoch=d["epoch"], running=tuple(d.get("running", [])))


_CODECS = {
    "consensus": (_relay_to_json, _relay_from_json),
    "as_paths": (_path_to_json, _path_from_json),
    "as_clusters": (_cluster_to_json, _cluster_from_json),
    "ixp_clusters": (_cluster_to_json, _cluster_from_json),
    "geo": (_geo_to_json, _geo_from_json),
    "uptime": (_uptime_to_json, _uptime_from_json),
}


def save_bundle(bundle, directory):
    os.makedirs(directory, exist_ok=True)
    for name, filename in _FILES.items():
        encode = _CODECS[name][0]
        records = getattr(bundle, name)
        with open(os.path.join(directory, filename), "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(encode(rec), sort_keys=True))
                fh.write("\n")


def load_bundle(directory):
    if not os.path.isdir(directory):
        raise DatasetError(f"bundle directory not found: {directory}")
    parts = {}
    for name, filename in _FILES.items():
        decode = _CODECS[name][1]
        path = os.path.join(directory, filename)
        records = []
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        records.append(decode(json.loads(line)))
                    except (ValueError, KeyError) as exc:
                        raise DatasetError(
                            f"{filename}:{lineno}: bad record: {exc}") from exc
        parts[name] = tuple(records)
    bundle = DatasetBundle(**parts)
    bundle.check()
    return bundle
