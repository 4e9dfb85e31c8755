#pragma once

// Matrix Market reader for symmetric real input.  Coordinate and array
// formats are accepted; `symmetric` files store the lower triangle and are
// mirrored on load, `general` files must already be symmetric to round-off
// or the reader refuses them.  The result is a DiagonalOperator when every
// stored entry sits on the diagonal, a DenseOperator otherwise.

#include <iosfwd>
#include <memory>
#include <string>

#include "symkry/linops.hpp"

namespace symkry {

std::unique_ptr<SymmetricOperator> read_matrix_market(std::istream& in);
std::unique_ptr<SymmetricOperator> read_matrix_market_file(const std::string& path);

}  // namespace symkry
