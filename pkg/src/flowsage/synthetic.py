"""Seeded synthetic data: planted flow graphs for the trainer, outlier sets
for the detectors, and a small NetFlow-format fixture for pipeline runs."""

from __future__ import annotations

import csv

import numpy as np

from .graph import FlowGraph, build_graph_from_arrays
from .ingest import DatasetSchema, get_schema


def two_regime_flow_graph(
    n_flows: int = 2000,
    nodes_per_block: int = 20,
    feature_dim: int = 8,
    separation: float = 3.0,
    noise: float = 0.3,
    seed: int = 0,
) -> FlowGraph:
    """Two node blocks with intra-block flows drawn from distinct feature regimes.

    Block A edge features cluster around +separation on the first axis, block
    B around +separation on the second; shuffling edge features therefore
    puts roughly half the edges into the wrong topological context, which is
    what the self-supervised objective must learn to detect.
    """
    rng = np.random.default_rng([seed, 31])
    block_a = [f"10.0.0.{i}" for i in range(nodes_per_block)]
    block_b = [f"10.1.0.{i}" for i in range(nodes_per_block)]

    src_keys, dst_keys = [], []
    features = np.empty((n_flows, feature_dim), dtype=np.float64)
    base_a = np.zeros(feature_dim)
    base_a[0] = separation
    base_b = np.zeros(feature_dim)
    base_b[1] = separation
    for f in range(n_flows):
        if rng.random() < 0.5:
            pool, base = block_a, base_a
        else:
            pool, base = block_b, base_b
        u, v = rng.choice(len(pool), size=2, replace=False)
        src_keys.append(pool[u])
        dst_keys.append(pool[v])
        features[f] = base + noise * rng.standard_normal(feature_dim)
    return build_graph_from_arrays(src_keys, dst_keys, features)


def gaussian_with_outliers(
    n_inliers: int = 960,
    n_outliers: int = 40,
    dim: int = 4,
    outlier_shift: float = 8.0,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Standard-normal inliers plus shifted outliers; returns (X, labels)."""
    rng = np.random.default_rng([seed, 37])
    inliers = rng.standard_normal((n_inliers, dim))
    outliers = outlier_shift + rng.standard_normal((n_outliers, dim))
    X = np.vstack([inliers, outliers])
    labels = np.concatenate([np.zeros(n_inliers, dtype=np.int64),
                             np.ones(n_outliers, dtype=np.int64)])
    perm = rng.permutation(X.shape[0])
    return X[perm], labels[perm]


def write_fixture_csv(
    path,
    schema: str | DatasetSchema = "nf-unsw-nb15-v2",
    n_benign: int = 170,
    n_attack: int = 30,
    seed: int = 7,
) -> None:
    """Write a small labelled NetFlow-format CSV in the given schema's layout.

    Benign flows connect a handful of clients to a few servers with moderate
    feature values; attack flows hammer one victim with heavy, fast traffic
    from a small set of sources. A few numeric cells are left empty to
    exercise missing-value handling.
    """
    sch = get_schema(schema)
    rng = np.random.default_rng([seed, 41])
    clients = [f"192.168.1.{i}" for i in range(2, 12)]
    servers = ["10.0.0.2", "10.0.0.3", "10.0.0.4"]
    attackers = [f"172.16.0.{i}" for i in range(2, 6)]
    victim = "10.0.0.2"

    header = [sch.src_ip_col, sch.src_port_col, sch.dst_ip_col, sch.dst_port_col]
    header += list(sch.feature_order) + [sch.label_col, sch.attack_type_col]

    def benign_row():
        src = clients[rng.integers(len(clients))]
        dst = servers[rng.integers(len(servers))]
        values = {
            "PROTOCOL": rng.choice(["6", "6", "17"]),
            "L7_PROTO": rng.choice(["7.0", "0.0", "5.0"]),
            "TCP_FLAGS": rng.choice(["27", "22", "25"]),
            "CLIENT_TCP_FLAGS": rng.choice(["27", "22"]),
            "SERVER_TCP_FLAGS": rng.choice(["27", "20"]),
            "ICMP_TYPE": "0",
            "ICMP_IPV4_TYPE": "0",
            "DNS_QUERY_TYPE": rng.choice(["0", "1"]),
            "FTP_COMMAND_RET_CODE": "0",
        }
        row = [src, str(rng.integers(1024, 65535)), dst, str(rng.integers(1, 1024))]
        for col in sch.feature_order:
            if col in values:
                row.append(values[col])
            elif rng.random() < 0.01:
                row.append("")   # occasional missing numeric cell
            else:
                row.append(repr(round(float(rng.lognormal(4.0, 1.0)), 3)))
        row += ["0", "Benign"]
        return row

    def attack_row():
        src = attackers[rng.integers(len(attackers))]
        values = {
            "PROTOCOL": "6",
            "L7_PROTO": "0.0",
            "TCP_FLAGS": "2",
            "CLIENT_TCP_FLAGS": "2",
            "SERVER_TCP_FLAGS": "0",
            "ICMP_TYPE": "0",
            "ICMP_IPV4_TYPE": "0",
            "DNS_QUERY_TYPE": "0",
            "FTP_COMMAND_RET_CODE": "0",
        }
        row = [src, str(rng.integers(1024, 65535)), victim, "80"]
        for col in sch.feature_order:
            if col in values:
                row.append(values[col])
            else:
                row.append(repr(round(float(rng.lognormal(7.5, 0.5)), 3)))
        row += ["1", "DoS"]
        return row

    rows = [benign_row() for _ in range(n_benign)] + [attack_row() for _ in range(n_attack)]
    order = rng.permutation(len(rows))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in order:
            writer.writerow(rows[i])
