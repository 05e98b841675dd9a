#pragma once

#include <stdexcept>
#include <string>

namespace mapc {

// Placement or run configuration that cannot be satisfied (e.g. K < 2,
// rejection sampling exhausted, malformed config).
class InfeasibleConfiguration : public std::runtime_error {
public:
    explicit InfeasibleConfiguration(const std::string& what) : std::runtime_error(what) {}
};

// Contention resolution exceeded its redraw cap; indicates a broken RNG or
// pathological contender set, never expected in normal runs.
class ContentionDeadlock : public std::runtime_error {
public:
    explicit ContentionDeadlock(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mapc
