#pragma once

#include <iosfwd>
#include <string>

#include "dpslr/types.hpp"

namespace dpslr {

// Two numeric columns under a "x,y" header. In strict mode out-of-range
// values are rejected with their row number; otherwise they are clipped to
// the unit square.
Dataset read_dataset_csv(std::istream& in, RangePolicy policy);
Dataset read_dataset_csv_file(const std::string& path, RangePolicy policy);

void write_dataset_csv(std::ostream& out, const Dataset& d);
void write_dataset_csv_file(const std::string& path, const Dataset& d);

}  // namespace dpslr
