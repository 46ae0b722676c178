# -------------------------------------------------
# Figures of a run: error surrogate against h for every series, and the
# real/imaginary parts of a solution drawn element by element.
# -------------------------------------------------

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.collections import PolyCollection
import numpy as np

REFERENCE_SLOPE = 0.5
REFERENCE_SCALE = 0.25


def draw_convergence(series: dict, filename: str, title: str = "Error surrogate (residual + jumps)"):
    """
    Log-log plot of total = residual + jumps against h, one line per series,
    with the reference curve 0.25 h^(1/2).

    @param series: series name -> list of ConvergenceRecord.
    @param filename: PNG to write.
    """
    fig, ax = plt.subplots(figsize=(7, 5))
    markers = ['o', 's', '^', 'v', 'D', 'x']
    hs = []
    for i, name in enumerate(sorted(series)):
        records = series[name]
        h = [r.h for r in records]
        total = [r.total for r in records]
        hs.extend(h)
        ax.loglog(h, total, marker=markers[i % len(markers)], label=name.replace("_", " "))

    if hs:
        h_ref = np.array([min(hs), max(hs)])
        ax.loglog(h_ref, REFERENCE_SCALE * h_ref ** REFERENCE_SLOPE, 'k--', label=r'$0.25\,h^{1/2}$')

    ax.set_xlabel("h")
    ax.set_ylabel("residual + jumps")
    ax.set_title(title)
    ax.invert_xaxis()
    ax.grid(True, which='both', alpha=0.3)
    ax.legend(fontsize='small', frameon=False)
    fig.tight_layout()
    fig.savefig(filename, dpi=150)
    plt.close(fig)
    print(f"Figure saved to {filename}")


def element_values(dofs, coefficients) -> tuple:
    """
    @returns (polygons (E, 4, 2), mean coefficient per element (E,)); dofs
        without a basis function (zero trace) count as 0.
    """
    coefficients = np.asarray(coefficients)
    polygons, values = [], []
    for j, mesh in enumerate(dofs.meshes):
        edofs = dofs.elementDofs(j)
        padded = np.where(edofs >= 0, coefficients[np.maximum(edofs, 0)], 0.0)
        polygons.append(mesh.nodes[mesh.elements][:, :, :2])
        values.append(padded.mean(axis=1))
    return np.concatenate(polygons), np.concatenate(values)


def draw_solution(dofs, solution, filename: str, title: str = "u_h"):
    """
    Real part (left) and imaginary part (right) of u_h on the screen, seen
    from above (x, y plane).
    """
    coefficients = getattr(solution, "coefficients", solution)
    polygons, values = element_values(dofs, coefficients)

    fig, axes = plt.subplots(1, 2, figsize=(12, 5))
    fig.suptitle(title, fontsize=14)

    # ----------------------------------------
    # LEFT: real part, RIGHT: imaginary part
    # ----------------------------------------
    for ax, part, label in zip(axes, (values.real, values.imag), ("Re", "Im")):
        collection = PolyCollection(polygons, array=part, cmap='viridis', edgecolors='grey', linewidths=0.2)
        ax.add_collection(collection)
        ax.autoscale_view()
        ax.set_aspect('equal')
        ax.set_title(f"{label} {title}")
        fig.colorbar(collection, ax=ax, fraction=0.046, pad=0.04)

    fig.tight_layout()
    fig.savefig(filename, dpi=150)
    plt.close(fig)
    print(f"Figure saved to {filename}")
