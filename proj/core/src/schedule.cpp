#include "mapc/schedule.hpp"

#include <stdexcept>

namespace mapc {

TransmissionSchedule TransmissionSchedule::from_bits(int ap, std::string_view bits) {
    TransmissionSchedule s;
    s.ap = ap;
    s.slots.reserve(bits.size());
    for (char c : bits) {
        if (c != '0' && c != '1')
            throw std::invalid_argument("schedule bitstring may contain only 0 and 1");
        s.slots.push_back(c == '1' ? 1 : 0);
    }
    return s;
}

std::string TransmissionSchedule::bits() const {
    std::string out;
    out.reserve(slots.size());
    for (auto b : slots) out.push_back(b ? '1' : '0');
    return out;
}

int TransmissionSchedule::transmit_count() const {
    int n = 0;
    for (auto b : slots) n += b ? 1 : 0;
    return n;
}

std::vector<std::uint8_t> rank_partition_slots(int rank, int group_size, int num_slots) {
    if (group_size <= 0) throw std::invalid_argument("rank_partition_slots: group_size must be > 0");
    if (rank < 0 || rank >= group_size)
        throw std::invalid_argument("rank_partition_slots: rank out of range");
    std::vector<std::uint8_t> slots(num_slots, 0);
    for (int s = 0; s < num_slots; ++s)
        if (s % group_size == rank) slots[s] = 1;
    return slots;
}

}  // namespace mapc
