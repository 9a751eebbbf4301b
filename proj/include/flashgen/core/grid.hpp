#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/types.hpp"

namespace flashgen {

// Row-major 2-D array of per-cell values. Rows index wordlines, columns
// index bitlines.
template <typename Cell>
struct CellGrid {
  int rows = 0;
  int cols = 0;
  std::vector<Cell> cells;

  CellGrid() = default;
  CellGrid(int r, int c) : rows(r), cols(c), cells(static_cast<std::size_t>(r) * c) {
    if (r < 1 || c < 1) throw std::invalid_argument("grid dimensions must be positive");
  }
  CellGrid(int r, int c, std::vector<Cell> v) : rows(r), cols(c), cells(std::move(v)) {
    if (cells.size() != static_cast<std::size_t>(r) * c)
      throw std::invalid_argument("cell count does not match grid dimensions");
  }

  Cell& at(int r, int c) { return cells[static_cast<std::size_t>(r) * cols + c]; }
  const Cell& at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return cells.size(); }

  bool same_shape(int r, int c) const { return rows == r && cols == c; }
  bool operator==(const CellGrid&) const = default;
};

using ProgramGrid = CellGrid<ProgramLevel>;
using VoltageGrid = CellGrid<VoltageLevel>;

// One paired channel instance: programmed levels, read voltages, and the
// P/E stamp the read was taken at.
struct ChannelRecord {
  ProgramGrid pl;
  VoltageGrid vl;
  PECycle pe;

  bool operator==(const ChannelRecord&) const = default;
};

// The two pattern directions: WL walks along a wordline (column neighbors),
// BL walks along a bitline (row neighbors).
enum class Direction { WL, BL };

inline const char* to_string(Direction d) { return d == Direction::WL ? "WL" : "BL"; }

// Program levels of three consecutive cells in one direction.
struct NeighborPattern {
  ProgramLevel prev;
  ProgramLevel center;
  ProgramLevel next;
  Direction direction = Direction::WL;

  bool operator==(const NeighborPattern&) const = default;

  // Compact "aCb" digit form, e.g. 707.
  std::string digits() const {
    return std::to_string(prev.value) + std::to_string(center.value) + std::to_string(next.value);
  }
};

// Pattern around an interior cell. BL direction reads the row neighbors of
// the same bitline, WL direction the column neighbors of the same wordline.
inline NeighborPattern pattern_at(const ProgramGrid& grid, int row, int col, Direction dir) {
  if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols)
    throw std::out_of_range("pattern_at: cell outside grid");
  if (dir == Direction::BL) {
    if (row == 0 || row == grid.rows - 1)
      throw std::out_of_range("pattern_at: BL neighbor outside grid");
    return {grid.at(row - 1, col), grid.at(row, col), grid.at(row + 1, col), dir};
  }
  if (col == 0 || col == grid.cols - 1)
    throw std::out_of_range("pattern_at: WL neighbor outside grid");
  return {grid.at(row, col - 1), grid.at(row, col), grid.at(row, col + 1), dir};
}

// Non-overlapping tile x tile crops in row-major tile order. Trailing
// remainder rows/columns are dropped.
template <typename Cell>
std::vector<CellGrid<Cell>> crop_blocks(const CellGrid<Cell>& block, int tile) {
  if (tile < 3) throw std::invalid_argument("crop tile must be at least 3");
  const int tr = block.rows / tile;
  const int tc = block.cols / tile;
  std::vector<CellGrid<Cell>> out;
  out.reserve(static_cast<std::size_t>(tr) * tc);
  for (int bi = 0; bi < tr; ++bi) {
    for (int bj = 0; bj < tc; ++bj) {
      CellGrid<Cell> t(tile, tile);
      for (int r = 0; r < tile; ++r)
        for (int c = 0; c < tile; ++c) t.at(r, c) = block.at(bi * tile + r, bj * tile + c);
      out.push_back(std::move(t));
    }
  }
  return out;
}

}  // namespace flashgen
