#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "passive/core_types.hpp"

namespace passive::csv {

/// Decimal rendering with 17 significant digits (round-trips every double).
std::string format(double value);

// Profiles: `# kind,left,right,count` then one value per line.
void write(std::ostream& out, const Profile& p);
Profile read_profile(std::istream& in);

// Traces: `# flavor,t0,dt,count` then one value per line.
void write(std::ostream& out, const BoundaryTrace& trace);
BoundaryTrace read_trace(std::istream& in);

// Mode sets: `# interval_length,count` then `lambda,amplitude,confidence[,index]`.
// The index column is written only when at least one mode carries an index.
void write(std::ostream& out, const ModeSet& modes);
ModeSet read_modes(std::istream& in);

// Counts: `# thresholds,count` then `threshold,N,S,d`.
void write(std::ostream& out, const SpectrumCounts& counts);
SpectrumCounts read_counts(std::istream& in);

template <class T>
void save(const std::filesystem::path& path, const T& value);

Profile load_profile(const std::filesystem::path& path);
BoundaryTrace load_trace(const std::filesystem::path& path);
ModeSet load_modes(const std::filesystem::path& path);
SpectrumCounts load_counts(const std::filesystem::path& path);

}  // namespace passive::csv
