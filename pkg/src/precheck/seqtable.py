"""
The public symbol table and precheck selections drawn from it.

The table holds ``T`` constellation symbols stored twice back to back, so
any run of ``L <= T`` symbols that starts in the first copy is a contiguous
slice. All indices here are 0-based: base symbol ``k`` is "Symbol k+1" when
counting from one.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, SelectionError
from .phy import Modulation

__all__ = [
    "SymbolTable",
    "PrecheckSelection",
    "generate_table",
    "select_precheck",
    "random_selection",
    "save_table",
    "load_table",
]


@dataclass(frozen=True, eq=False)
class SymbolTable:
    base_symbols: np.ndarray

    def __post_init__(self):
        base = np.asarray(self.base_symbols, dtype=complex).ravel().copy()
        base.setflags(write=False)
        object.__setattr__(self, "base_symbols", base)
        doubled = np.concatenate([base, base])
        doubled.setflags(write=False)
        object.__setattr__(self, "doubled", doubled)

    @property
    def length(self) -> int:
        return self.base_symbols.size

    def __len__(self) -> int:
        return self.length


@dataclass(frozen=True)
class PrecheckSelection:
    start_index: int
    length: int

    def check(self, table_length: int) -> None:
        if not 0 <= self.start_index < table_length:
            raise SelectionError(f"start index {self.start_index} outside [0, {table_length})")
        if not 1 <= self.length <= table_length:
            raise SelectionError(f"selection length {self.length} outside [1, {table_length}]")


def generate_table(T: int, mod: Modulation, rng: np.random.Generator) -> SymbolTable:
    """``T`` i.i.d. uniform constellation symbols."""
    if T < 2:
        raise ConfigError(f"table length must be at least 2, got {T}", key="table_length")
    return SymbolTable(mod.constellation[rng.integers(0, mod.order, size=T)])


def select_precheck(table: SymbolTable, sel: PrecheckSelection) -> np.ndarray:
    sel.check(table.length)
    return table.doubled[sel.start_index:sel.start_index + sel.length].copy()


def random_selection(T: int, L: int, rng: np.random.Generator) -> PrecheckSelection:
    if not 1 <= L <= T:
        raise ConfigError(f"sequence length {L} outside [1, {T}]", key="seq_length")
    return PrecheckSelection(int(rng.integers(0, T)), L)


def save_table(table: SymbolTable, path) -> None:
    """Dump as ``index,re,im`` lines (``repr`` floats round-trip exactly)."""
    lines = [f"{k},{float(s.real)!r},{float(s.imag)!r}" for k, s in enumerate(table.base_symbols)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_table(path) -> SymbolTable:
    entries = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            k, re, im = line.split(",")
            entries[int(k)] = complex(float(re), float(im))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: expected 'index,re,im', got {line!r}", key=str(path)) from exc
    if sorted(entries) != list(range(len(entries))):
        raise ConfigError("table indices must be 0..T-1 without gaps", key=str(path))
    return SymbolTable(np.array([entries[k] for k in range(len(entries))]))
