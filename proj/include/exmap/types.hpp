#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace exmap {

/// Reader status group. Order is the order used in the stacked design.
enum class Sector : int {
  Lecturers = 0,
  Librarians,
  Professors,
  Researchers,
  Students,
  Total,
};

inline constexpr std::size_t kSectorCount = 6;

/// The seven indicators of the joint model: the six reader sectors followed
/// by the citation-based indicator.
enum class Indicator : int {
  Lecturers = 0,
  Librarians,
  Professors,
  Researchers,
  Students,
  AllReaders,
  Citations,
};

inline constexpr std::size_t kIndicatorCount = 7;

inline constexpr std::array<Sector, kSectorCount> kAllSectors = {
    Sector::Lecturers, Sector::Librarians, Sector::Professors,
    Sector::Researchers, Sector::Students, Sector::Total};

inline constexpr std::array<Indicator, kIndicatorCount> kAllIndicators = {
    Indicator::Lecturers,   Indicator::Librarians, Indicator::Professors,
    Indicator::Researchers, Indicator::Students,   Indicator::AllReaders,
    Indicator::Citations};

constexpr Indicator indicator_for(Sector s) { return static_cast<Indicator>(static_cast<int>(s)); }
constexpr std::size_t index_of(Sector s) { return static_cast<std::size_t>(s); }
constexpr std::size_t index_of(Indicator i) { return static_cast<std::size_t>(i); }

std::string_view to_string(Sector s);
std::string_view to_string(Indicator i);
std::optional<Sector> sector_from_string(std::string_view name);
std::optional<Indicator> indicator_from_string(std::string_view name);

/// Per-sector reader counts indexed by Sector.
using SectorCounts = std::array<std::int64_t, kSectorCount>;

/// Recoverable problem attached to an input location.
struct Diagnostic {
  std::size_t line = 0;  // 0 when not tied to an input line
  std::string message;
};

class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace exmap
