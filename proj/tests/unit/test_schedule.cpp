#include <set>

#include "doctest.h"
#include "mapc/schedule.hpp"

using namespace mapc;

TEST_CASE("bits round-trip and count") {
    auto s = TransmissionSchedule::from_bits(3, "10101");
    CHECK(s.ap == 3);
    CHECK(s.bits() == "10101");
    CHECK(s.transmit_count() == 3);
    CHECK(s.transmits(0));
    CHECK_FALSE(s.transmits(1));
    CHECK_THROWS(TransmissionSchedule::from_bits(0, "10x01"));
}

TEST_CASE("rank partition covers all slots exactly once") {
    for (int n = 1; n <= 5; ++n) {
        for (int L : {1, 3, 5, 8}) {
            std::vector<int> owners(L, 0);
            for (int rank = 0; rank < n; ++rank) {
                auto slots = rank_partition_slots(rank, n, L);
                REQUIRE(static_cast<int>(slots.size()) == L);
                for (int s = 0; s < L; ++s)
                    if (slots[s]) {
                        ++owners[s];
                        CHECK(s % n == rank);
                    }
            }
            for (int s = 0; s < L; ++s) CHECK(owners[s] == 1);
        }
    }
}

TEST_CASE("rank partition rejects bad arguments") {
    CHECK_THROWS(rank_partition_slots(-1, 2, 5));
    CHECK_THROWS(rank_partition_slots(2, 2, 5));
    CHECK_THROWS(rank_partition_slots(0, 0, 5));
}
