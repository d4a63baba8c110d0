#pragma once

#include <mdeconv/kernels.hpp>
#include <mdeconv/mellin.hpp>
#include <mdeconv/simulate.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mdeconv::cli {

//! uniform[:theta] | beta:nu[,theta] | power:nu | pareto:nu,theta |
//! gamma:alpha,mu | halfnormal:upsilon | logproduct. Throws InvalidArgument.
ErrorModel parse_model(std::string_view text);

//! gaussian:m | flat:m[,q] | supersmooth:m[,lambda] | zero:m,s |
//! exponential:m. Throws InvalidArgument.
KernelFamily parse_kernel(std::string_view text);

//! "a+bi", "a-bi", "a", "bi". Throws InvalidArgument.
cplx parse_complex(std::string_view text);

//! 12 significant digits; the imaginary part is omitted when it is 0.
std::string format_complex(cplx z);

//! One numeric column, optional header on line 1. Throws ParseError with the
//! offending line, or EmptyFile.
std::vector<double> load_sample(const std::filesystem::path& path);

//! TOML simulation spec. Throws ParseError.
SimulationSpec parse_simulation_spec(std::string_view text);
SimulationSpec load_simulation_spec(const std::filesystem::path& path);

//! Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

//! Entry point. Exit codes: 0 success, 1 computational error, 2 usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace mdeconv::cli
