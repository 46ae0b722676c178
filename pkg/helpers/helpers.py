# -------------------------------------------------
# Helper functions to keep screen_runner file clean: configuration files,
# timers, and the plain-text / binary dumps written by the experiments.
# -------------------------------------------------

import json
import os
import struct
import time
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from helpers.errors import ConfigurationError, GeometryError

_timer_start = None  # need a global counter to keep track

MESH_HEADER = "screenbem-mesh v1"
MATRIX_MAGIC = b"SBEMMAT1"


def load_config(config_path: str) -> dict:
    """
    Loads a configuration file: JSON if the name ends in .json, otherwise
    key=value lines ('#' starts a comment).

    @param config_path: Path to the config file.
    @returns Parsed config dictionary (values of key=value files stay strings).
    """
    try:
        with open(config_path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise ConfigurationError([f"cannot read config file '{config_path}': {e}"])

    if config_path.lower().endswith(".json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError([f"config file '{config_path}' is not valid JSON: {e}"])
    return parse_key_values(text, config_path)


def parse_key_values(text: str, source: str = "<text>") -> dict:
    config = {}
    bad = []
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            bad.append(f"{source}:{number}: expected key=value, got '{line}'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        config[key.replace("-", "_")] = value
    if bad:
        raise ConfigurationError(bad)
    return config


def start_timer():
    """Starts a timer for measuring elapsed time."""
    global _timer_start
    _timer_start = time.perf_counter()


def stop_timer(label="Elapsed") -> Optional[float]:
    """Stops the timer and prints the elapsed time with a label."""
    global _timer_start
    if _timer_start is None:
        print(f"{label}: Timer was not started.")
        return None
    elapsed = time.perf_counter() - _timer_start
    print(f"{label}: {elapsed:.4f} seconds")
    _timer_start = None
    return elapsed


def output_path(out_dir: str, filename: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, filename)


def format_value(value) -> str:
    """Deterministic text for CSV cells: floats with 12 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def write_csv(filename: str, header: str, rows: Iterable[Sequence]):
    with open(filename, 'w', newline='\n') as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(format_value(v) if not isinstance(v, str) else v for v in row) + "\n")


def save_mesh_dump(meshes, skeleton, filename: str):
    """
    Saves the subdomain meshes and the skeleton to a text file.

    Format:
    screenbem-mesh v1
    v x y z                          (nodes of all subdomains, numbered from 0 in order)
    q sub_id i0 i1 i2 i3             (elements, counterclockwise)
    s x0 y0 z0 x1 y1 z1 left right   (skeleton segments, right = -1 on the boundary)
    """
    with open(filename, 'w') as f:
        f.write(MESH_HEADER + "\n")
        offset = 0
        for mesh in meshes:
            for x, y, z in mesh.nodes:
                f.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for mesh in meshes:
            for element in mesh.elements + offset:
                f.write(f"q {mesh.subdomain_id} " + " ".join(str(int(i)) for i in element) + "\n")
            offset += mesh.numNodes()
        for seg in skeleton.segments:
            coords = " ".join(f"{c:.17g}" for c in np.concatenate([seg.start, seg.end]))
            right = -1 if seg.right is None else seg.right
            f.write(f"s {coords} {seg.left} {right}\n")

    print(f"Mesh saved to {filename}")


def read_mesh_dump(filename: str):
    """
    Loads a mesh dump written by save_mesh_dump.

    @returns (list of SubdomainMesh, list of segments (start, end, left, right or None)).
    """
    from geometry.mesh import SubdomainMesh

    with open(filename, 'r') as f:
        lines = [line.split() for line in f if line.strip()]
    if not lines or " ".join(lines[0]) != MESH_HEADER:
        raise GeometryError(f"{filename}: missing '{MESH_HEADER}' header")

    vertices = np.array([[float(v) for v in parts[1:4]] for parts in lines if parts[0] == "v"])
    quads = {}
    for parts in lines:
        if parts[0] == "q":
            quads.setdefault(int(parts[1]), []).append([int(i) for i in parts[2:6]])
    segments = []
    for parts in lines:
        if parts[0] == "s":
            values = [float(v) for v in parts[1:7]]
            right = int(parts[8])
            segments.append((np.array(values[:3]), np.array(values[3:]), int(parts[7]),
                             None if right < 0 else right))

    meshes = []
    for sub_id in sorted(quads):
        elements = np.array(quads[sub_id])
        used, local = np.unique(elements, return_inverse=True)
        nodes = vertices[used]
        local = local.reshape(elements.shape)
        n = np.cross(nodes[local[0, 1]] - nodes[local[0, 0]], nodes[local[0, 3]] - nodes[local[0, 0]])
        meshes.append(SubdomainMesh(sub_id, nodes, local, n / np.linalg.norm(n)))

    print(f"Mesh loaded from {filename}")
    return meshes, segments


def save_solution_csv(solution, filename: str):
    """Solution dump: global_dof,re,im."""
    coefficients = np.asarray(getattr(solution, "coefficients", solution))
    write_csv(filename, "global_dof,re,im",
              ((i, c.real, c.imag) for i, c in enumerate(coefficients)))


def save_matrix_dump(system, filename: str):
    """
    Binary dump of A and b: 8-byte magic 'SBEMMAT1', uint64 N, then A
    (row-major) and b as little-endian complex64.
    """
    A = np.ascontiguousarray(system.matrix, dtype="<c8")
    b = np.ascontiguousarray(system.rhs, dtype="<c8")
    with open(filename, 'wb') as f:
        f.write(MATRIX_MAGIC)
        f.write(struct.pack("<Q", len(b)))
        f.write(A.tobytes(order="C"))
        f.write(b.tobytes())

    print(f"Matrix saved to {filename}")


def load_matrix_dump(filename: str) -> Tuple[np.ndarray, np.ndarray]:
    with open(filename, 'rb') as f:
        if f.read(8) != MATRIX_MAGIC:
            raise ConfigurationError([f"{filename}: not a SBEMMAT1 matrix dump"])
        n, = struct.unpack("<Q", f.read(8))
        A = np.frombuffer(f.read(8 * n * n), dtype="<c8").reshape(n, n)
        b = np.frombuffer(f.read(8 * n), dtype="<c8")
    return A, b


def parse_range(text, name: str) -> List[int]:
    """'A..B' (inclusive), a single integer, or a list of integers."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    text = str(text).strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return list(range(int(a), int(b) + 1))
        return [int(text)]
    except ValueError:
        raise ConfigurationError([f"{name} must look like 'A..B', got '{text}'"])
