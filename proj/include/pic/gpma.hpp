#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pic/grid.hpp"
#include "pic/particles.hpp"

namespace pic {

/// Entries of the index array are particle storage indices (positions in the
/// SoA arrays); the sentinel marks an empty slot.
using ParticleRef = std::uint32_t;
inline constexpr ParticleRef kInvalidParticle = std::numeric_limits<ParticleRef>::max();
inline constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

struct GpmaConfig {
    double gap_ratio = 0.25;   // spare slots per bin, as a fraction of its count
    std::uint32_t min_gap = 2; // spare slots added to every bin regardless of count
    int borrow_scan_bins = 4;  // bins searched forward before declaring overflow
};

struct PendingMove {
    ParticleRef particle;
    std::uint32_t new_cell;
};

enum class InsertKind { placed, placed_with_borrow, overflowed };

struct InsertResult {
    InsertKind kind;
    std::uint32_t shifted = 0; // entries moved to open a slot (borrow path only)
};

struct ApplyMovesResult {
    std::uint64_t inserts = 0;
    std::uint64_t shifted = 0;
    std::uint32_t overflowed = 0;
    bool rebuilt = false;
};

/// Gapped packed index array. Bins (one per grid cell, ordered by cell id)
/// are contiguous slot ranges holding the storage indices of that cell's
/// particles, with spare empty slots so that most inserts and deletes touch a
/// single slot. A local rebuild redistributes everything with fresh gaps; it
/// never moves the particle data itself.
class Gpma {
public:
    Gpma() = default;

    /// Builds the index from per-cell particle lists. Bin i receives
    /// ceil(count*(1+gap_ratio)) + min_gap slots with the gaps at its tail.
    static Gpma from_bins(const std::vector<std::vector<ParticleRef>>& bins, GpmaConfig cfg) {
        Gpma g;
        g.cfg_ = cfg;
        g.layout(bins);
        g.debug_validate();
        return g;
    }

    std::uint32_t n_cells() const { return static_cast<std::uint32_t>(bin_lengths_.size()); }
    std::uint32_t capacity() const { return static_cast<std::uint32_t>(slots_.size()); }
    std::uint32_t num_particles() const { return num_particles_; }
    std::uint32_t num_empty_slots() const { return num_empty_; }
    double empty_slot_ratio() const {
        return capacity() == 0 ? 1.0 : static_cast<double>(num_empty_) / capacity();
    }
    bool was_rebuilt_this_step() const { return rebuilt_this_step_; }
    void clear_rebuilt_flag() { rebuilt_this_step_ = false; }
    std::uint64_t rebuild_count() const { return rebuild_count_; }
    const GpmaConfig& config() const { return cfg_; }
    const std::vector<PendingMove>& overflow_list() const { return overflow_; }

    ParticleRef slot_entry(std::uint32_t slot) const { return slots_[slot]; }
    std::uint32_t bin_offset(std::uint32_t cell) const { return bin_offsets_[cell]; }
    std::uint32_t bin_end(std::uint32_t cell) const { return bin_offsets_[cell + 1]; }
    std::uint32_t bin_length(std::uint32_t cell) const { return bin_lengths_[cell]; }

    /// Slot currently holding particle p, or kNoSlot.
    std::uint32_t slot_of(ParticleRef p) const {
        return p < slot_of_.size() ? slot_of_[p] : kNoSlot;
    }

    /// Marks a slot empty. O(1).
    void delete_slot(std::uint32_t slot) {
        if (slot >= slots_.size() || slots_[slot] == kInvalidParticle)
            throw std::logic_error("gpma: delete of an empty slot");
        delete_in_bin(slot, bin_of_slot(slot));
        debug_validate();
    }

    /// Places particle p into cell's bin. Uses a spare slot in the bin when
    /// one exists; otherwise borrows the nearest empty slot from the next few
    /// bins, shifting the intervening entries by one; otherwise records the
    /// particle on the overflow list.
    InsertResult insert(ParticleRef p, std::uint32_t cell) {
        const InsertResult r = insert_impl(p, cell);
        debug_validate();
        return r;
    }

    /// Inserts every pending move, then rebuilds the tile if any insertion
    /// overflowed (a rebuild is the only way overflowed particles re-enter
    /// the bins). A low empty-slot ratio alone is left to the resort policy.
    ApplyMovesResult apply_moves(std::vector<PendingMove>& pending) {
        ApplyMovesResult r;
        for (const PendingMove& m : pending) {
            const InsertResult ir = insert_impl(m.particle, m.new_cell);
            ++r.inserts;
            r.shifted += ir.shifted;
            if (ir.kind == InsertKind::overflowed) ++r.overflowed;
        }
        pending.clear();
        if (!overflow_.empty()) {
            rebuild();
            r.rebuilt = true;
        }
        debug_validate();
        return r;
    }

    /// Redistributes all placed particles contiguously in their bins, drains
    /// the overflow list, and re-establishes uniform gaps (growing the
    /// capacity as needed). O(num_particles).
    void rebuild() {
        std::vector<std::vector<ParticleRef>> bins(n_cells());
        for (std::uint32_t c = 0; c < n_cells(); ++c) {
            bins[c].reserve(bin_lengths_[c]);
            for (std::uint32_t s = bin_offsets_[c]; s < bin_offsets_[c + 1]; ++s)
                if (slots_[s] != kInvalidParticle) bins[c].push_back(slots_[s]);
        }
        for (const PendingMove& m : overflow_) bins[m.new_cell].push_back(m.particle);
        overflow_.clear();
        layout(bins);
        rebuilt_this_step_ = true;
        ++rebuild_count_;
        debug_validate();
    }

    /// Valid particle refs of one bin, in slot order.
    template <class Fn>
    void for_each_in_cell(std::uint32_t cell, Fn&& fn) const {
        for (std::uint32_t s = bin_offsets_[cell]; s < bin_offsets_[cell + 1]; ++s)
            if (slots_[s] != kInvalidParticle) fn(slots_[s]);
    }

    std::vector<ParticleRef> cell_entries(std::uint32_t cell) const {
        if (cell >= n_cells()) throw std::out_of_range("gpma: cell out of range");
        std::vector<ParticleRef> out;
        out.reserve(bin_lengths_[cell]);
        for_each_in_cell(cell, [&](ParticleRef p) { out.push_back(p); });
        return out;
    }

    /// Detects particles whose cell changed, deletes them from their old bins
    /// and returns the (particle, new cell) list to apply.
    std::vector<PendingMove> detect_moves(const ParticleSoA& soa, const GridSpec& grid) {
        std::vector<PendingMove> pending;
        for (std::uint32_t c = 0; c < n_cells(); ++c) {
            for (std::uint32_t s = bin_offsets_[c]; s < bin_offsets_[c + 1]; ++s) {
                const ParticleRef p = slots_[s];
                if (p == kInvalidParticle) continue;
                const std::uint32_t c_new = cell_of(soa.position(p), grid).linear;
                if (c_new != c) {
                    delete_in_bin(s, c);
                    pending.push_back({p, c_new});
                }
            }
        }
        debug_validate();
        return pending;
    }

    /// Full structural check; throws std::logic_error on any violation.
    void validate() const {
        const std::uint32_t ncells = n_cells();
        if (bin_offsets_.size() != ncells + 1) fail("offsets size");
        if (bin_offsets_.front() != 0 || bin_offsets_.back() != capacity()) fail("offset bounds");
        std::uint64_t total = 0;
        for (std::uint32_t c = 0; c < ncells; ++c) {
            if (bin_offsets_[c] > bin_offsets_[c + 1]) fail("offsets not nondecreasing");
            std::uint32_t valid = 0;
            for (std::uint32_t s = bin_offsets_[c]; s < bin_offsets_[c + 1]; ++s)
                if (slots_[s] != kInvalidParticle) ++valid;
            if (valid != bin_lengths_[c]) fail("bin length mismatch");
            total += valid;
        }
        if (total != num_particles_) fail("particle count mismatch");
        if (num_particles_ + num_empty_ != capacity()) fail("slot accounting mismatch");
        if (free_stack_.size() != num_empty_) fail("stack size mismatch");
        std::vector<bool> seen(capacity(), false);
        for (std::size_t i = 0; i < free_stack_.size(); ++i) {
            const std::uint32_t s = free_stack_[i];
            if (s >= capacity() || seen[s]) fail("stack entry invalid or duplicated");
            seen[s] = true;
            if (slots_[s] != kInvalidParticle) fail("stack entry points at an occupied slot");
            if (free_pos_[s] != i) fail("stack position index mismatch");
        }
        for (std::uint32_t s = 0; s < capacity(); ++s) {
            if (slots_[s] == kInvalidParticle) {
                if (!seen[s]) fail("empty slot missing from stack");
            } else if (slot_of(slots_[s]) != s) {
                fail("reverse slot map mismatch");
            }
        }
    }

    /// validate() plus the binding between bins and particle positions.
    void validate(const ParticleSoA& soa, const GridSpec& grid) const {
        validate();
        for (std::uint32_t c = 0; c < n_cells(); ++c)
            for_each_in_cell(c, [&](ParticleRef p) {
                if (cell_of(soa.position(p), grid).linear != c)
                    fail("particle binned in the wrong cell");
            });
    }

private:
    GpmaConfig cfg_;
    std::vector<ParticleRef> slots_;
    std::vector<std::uint32_t> bin_offsets_; // n_cells + 1 entries
    std::vector<std::uint32_t> bin_lengths_;
    std::uint32_t num_particles_ = 0;
    std::uint32_t num_empty_ = 0;
    std::vector<std::uint32_t> free_stack_;
    std::vector<std::uint32_t> free_pos_; // slot -> position in free_stack_, kNoSlot when occupied
    std::vector<std::uint32_t> slot_of_;  // particle -> slot, kNoSlot when absent
    std::vector<PendingMove> overflow_;
    bool rebuilt_this_step_ = false;
    std::uint64_t rebuild_count_ = 0;

    [[noreturn]] static void fail(const char* what) {
        throw std::logic_error(std::string("gpma invariant violated: ") + what);
    }

    // full structural check after every mutating operation in debug builds
    void debug_validate() const {
#ifndef NDEBUG
        validate();
#endif
    }

    InsertResult insert_impl(ParticleRef p, std::uint32_t cell) {
        if (cell >= n_cells()) throw std::out_of_range("gpma: insert cell out of range");
        if (slot_of(p) != kNoSlot) throw std::logic_error("gpma: duplicate insert");
        const std::uint32_t lo = bin_offsets_[cell], hi = bin_offsets_[cell + 1];
        if (bin_lengths_[cell] < hi - lo) {
            // Gaps live at the tail after a rebuild, so scan backwards.
            for (std::uint32_t s = hi; s-- > lo;) {
                if (slots_[s] == kInvalidParticle) {
                    occupy(s, p, cell);
                    return {InsertKind::placed, 0};
                }
            }
        }
        return borrow_insert(p, cell);
    }

    std::uint32_t bin_of_slot(std::uint32_t slot) const {
        const auto it = std::upper_bound(bin_offsets_.begin(), bin_offsets_.end(), slot);
        return static_cast<std::uint32_t>(it - bin_offsets_.begin()) - 1;
    }

    void layout(const std::vector<std::vector<ParticleRef>>& bins) {
        const std::uint32_t ncells = static_cast<std::uint32_t>(bins.size());
        bin_offsets_.assign(ncells + 1, 0);
        bin_lengths_.assign(ncells, 0);
        std::uint64_t cap = 0;
        for (std::uint32_t c = 0; c < ncells; ++c) {
            const std::uint64_t count = bins[c].size();
            const auto padded = static_cast<std::uint64_t>(
                std::ceil(static_cast<double>(count) * (1.0 + cfg_.gap_ratio)));
            cap += padded + cfg_.min_gap;
            if (cap >= kInvalidParticle) throw std::length_error("gpma: capacity overflow");
            bin_offsets_[c + 1] = static_cast<std::uint32_t>(cap);
        }
        slots_.assign(cap, kInvalidParticle);
        free_stack_.clear();
        free_pos_.assign(cap, kNoSlot);
        ParticleRef max_ref = 0;
        for (const auto& bin : bins)
            for (ParticleRef p : bin) max_ref = std::max(max_ref, p);
        slot_of_.assign(bins.empty() ? 0 : static_cast<std::size_t>(max_ref) + 1, kNoSlot);
        num_particles_ = 0;
        for (std::uint32_t c = 0; c < ncells; ++c) {
            std::uint32_t s = bin_offsets_[c];
            for (ParticleRef p : bins[c]) {
                slots_[s] = p;
                slot_of_[p] = s;
                ++s;
            }
            bin_lengths_[c] = static_cast<std::uint32_t>(bins[c].size());
            num_particles_ += bin_lengths_[c];
            for (std::uint32_t gap = s; gap < bin_offsets_[c + 1]; ++gap) push_free(gap);
        }
        num_empty_ = static_cast<std::uint32_t>(free_stack_.size());
    }

    void push_free(std::uint32_t slot) {
        free_pos_[slot] = static_cast<std::uint32_t>(free_stack_.size());
        free_stack_.push_back(slot);
    }

    void remove_free(std::uint32_t slot) {
        const std::uint32_t pos = free_pos_[slot];
        const std::uint32_t last = free_stack_.back();
        free_stack_[pos] = last;
        free_pos_[last] = pos;
        free_stack_.pop_back();
        free_pos_[slot] = kNoSlot;
    }

    void occupy(std::uint32_t slot, ParticleRef p, std::uint32_t cell) {
        remove_free(slot);
        slots_[slot] = p;
        if (p >= slot_of_.size()) slot_of_.resize(static_cast<std::size_t>(p) + 1, kNoSlot);
        slot_of_[p] = slot;
        ++bin_lengths_[cell];
        ++num_particles_;
        --num_empty_;
    }

    void delete_in_bin(std::uint32_t slot, std::uint32_t cell) {
        slot_of_[slots_[slot]] = kNoSlot;
        slots_[slot] = kInvalidParticle;
        push_free(slot);
        --bin_lengths_[cell];
        --num_particles_;
        ++num_empty_;
    }

    InsertResult borrow_insert(ParticleRef p, std::uint32_t cell) {
        // Nearest empty slot in the next few bins; the scanned range holds no
        // gaps, so every slot crossed is an entry that must shift by one.
        const std::uint32_t scan_end =
            bin_offsets_[std::min<std::size_t>(cell + 1 + cfg_.borrow_scan_bins, n_cells())];
        const std::uint32_t start = bin_offsets_[cell + 1];
        std::uint32_t empty = kNoSlot;
        for (std::uint32_t s = start; s < scan_end; ++s) {
            if (slots_[s] == kInvalidParticle) {
                empty = s;
                break;
            }
        }
        if (empty == kNoSlot) {
            overflow_.push_back({p, cell});
            return {InsertKind::overflowed, 0};
        }
        const std::uint32_t donor_bin = bin_of_slot(empty);
        remove_free(empty);
        for (std::uint32_t s = empty; s > start; --s) {
            slots_[s] = slots_[s - 1];
            slot_of_[slots_[s]] = s;
        }
        slots_[start] = p;
        if (p >= slot_of_.size()) slot_of_.resize(static_cast<std::size_t>(p) + 1, kNoSlot);
        slot_of_[p] = start;
        // Shifted entries keep their bins: every boundary in (cell, donor_bin]
        // moves up by one, growing this bin at its tail and shrinking the donor.
        for (std::uint32_t b = cell + 1; b <= donor_bin; ++b) ++bin_offsets_[b];
        ++bin_lengths_[cell];
        ++num_particles_;
        --num_empty_;
        return {InsertKind::placed_with_borrow, empty - start};
    }
};

inline ApplyMovesResult apply_pending_moves(Gpma& g, std::vector<PendingMove>& pending) {
    return g.apply_moves(pending);
}

/// Counting sort by linear cell id: physically reorders the SoA so storage
/// order matches bin order, then indexes it. Returns the fresh index.
inline Gpma gpma_build(ParticleSoA& soa, const GridSpec& grid, GpmaConfig cfg = {}) {
    const std::uint32_t ncells = grid.n_cells();
    const std::size_t n = soa.size();
    std::vector<std::uint32_t> cells(n);
    std::vector<std::uint32_t> counts(ncells, 0);
    for (std::size_t p = 0; p < n; ++p) {
        cells[p] = cell_of(soa.position(p), grid).linear;
        ++counts[cells[p]];
    }
    std::vector<std::uint32_t> starts(ncells, 0);
    for (std::uint32_t c = 1; c < ncells; ++c) starts[c] = starts[c - 1] + counts[c - 1];
    std::vector<std::uint32_t> perm(n);
    {
        std::vector<std::uint32_t> cursor = starts;
        for (std::size_t p = 0; p < n; ++p) perm[cursor[cells[p]]++] = static_cast<std::uint32_t>(p);
    }
    soa.apply_permutation(perm);
    std::vector<std::vector<ParticleRef>> bins(ncells);
    for (std::uint32_t c = 0; c < ncells; ++c) {
        bins[c].resize(counts[c]);
        for (std::uint32_t t = 0; t < counts[c]; ++t) bins[c][t] = starts[c] + t;
    }
    return Gpma::from_bins(bins, cfg);
}

} // namespace pic
