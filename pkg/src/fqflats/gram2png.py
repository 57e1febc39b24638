#!/usr/bin/env python3
"""
Render incidence and Gram matrices of flat-incidence graphs as PNG images

Usage:
    fqflats-render --q 3 --d 2 --k 0 --h 1                  # incidence matrix N -> N_3_2_0_1.png
    fqflats-render --q 3 --d 3 --k 0 --h 1 --what gram      # NN^T instead
    fqflats-render --q 3 --d 4 --k 1 --h 3 --rows 240       # split tall matrices into chunks
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .config import Budget
from .constants import EXIT_OK, EXIT_USAGE, LOGGER_NAME
from .errors import FqFlatsError, InvalidParameters
from .gf import field_new
from .incidence import build_graph, gram_matrix

log = logging.getLogger(LOGGER_NAME)


def render_matrix(m: np.ndarray) -> np.ndarray:
    """Scale a non-negative integer matrix linearly onto 0..255 grey levels"""
    m = np.asarray(m)
    if m.ndim != 2:
        raise InvalidParameters(f"expected a 2-D matrix, got shape {m.shape}")
    if m.size and m.min() < 0:
        raise InvalidParameters("matrix has negative entries")
    top = int(m.max()) if m.size else 0
    if top == 0:
        return np.zeros(m.shape, dtype=np.uint8)
    return np.rint(m.astype(np.float64) * (255.0 / top)).astype(np.uint8)


def save_png(array: np.ndarray, output_path: Path):
    """Save numpy array as PNG"""
    image = Image.fromarray(np.ascontiguousarray(array, dtype=np.uint8))
    image.save(output_path, "PNG")
    log.info(f"Saved: {output_path}")


def save_chunks(array: np.ndarray, output_path: Path, max_rows: int | None = None) -> list[Path]:
    """Save array as one PNG, or as numbered chunks of at most max_rows rows"""
    total_rows = array.shape[0]
    if max_rows is None or total_rows <= max_rows:
        save_png(array, output_path)
        return [output_path]

    num_files = (total_rows + max_rows - 1) // max_rows
    log.info(f"Splitting into {num_files} files of up to {max_rows} rows each...")
    paths = []
    for i in range(num_files):
        start_row = i * max_rows
        end_row = min((i + 1) * max_rows, total_rows)
        chunk_path = output_path.parent / f"{output_path.stem}_{i + 1:04d}.png"
        save_png(array[start_row:end_row, :], chunk_path)
        paths.append(chunk_path)
    return paths


def render_graph(q: int, d: int, k: int, h: int, what: str = "incidence", budget: Budget | None = None) -> np.ndarray:
    graph = build_graph(field_new(q), d, k, h, budget)
    if what == "gram":
        return render_matrix(gram_matrix(graph, budget))
    return render_matrix(graph.incidence_matrix(dtype=np.uint8))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Render the incidence or Gram matrix of a flat-incidence graph as PNG")
    parser.add_argument("--q", type=int, required=True, help="field order")
    parser.add_argument("--d", type=int, required=True, help="ambient dimension")
    parser.add_argument("--k", type=int, required=True, help="dimension of the small flats")
    parser.add_argument("--h", type=int, required=True, help="dimension of the large flats")
    parser.add_argument("--what", choices=("incidence", "gram"), default="incidence")
    parser.add_argument("output", nargs="?", help="Output PNG file (optional)")
    parser.add_argument("--rows", "-r", type=int, help="Max rows per PNG (splits into multiple files)")

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(message)s", datefmt="%H:%M:%S")

    if args.rows is not None and args.rows < 1:
        print("error: --rows must be positive", file=sys.stderr)
        return EXIT_USAGE

    prefix = "N" if args.what == "incidence" else "G"
    output = Path(args.output) if args.output else Path(f"{prefix}_{args.q}_{args.d}_{args.k}_{args.h}.png")
    try:
        array = render_graph(args.q, args.d, args.k, args.h, args.what, Budget.from_env())
        save_chunks(array, output, args.rows)
    except (FqFlatsError, OSError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
