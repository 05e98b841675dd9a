#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mapc {

// Binary slot vector a_k in {0,1}^L plus the owning AP.
// Bitstring convention: leftmost character = slot 1.
struct TransmissionSchedule {
    int ap = 0;
    std::vector<std::uint8_t> slots;

    static TransmissionSchedule from_bits(int ap, std::string_view bits);  // throws on bad alphabet
    std::string bits() const;
    int transmit_count() const;
    bool transmits(int slot) const { return slots.at(slot) != 0; }
};

// Rank-based TDMA partition: rank i takes slots congruent to i mod group_size.
std::vector<std::uint8_t> rank_partition_slots(int rank, int group_size, int num_slots);

}  // namespace mapc
