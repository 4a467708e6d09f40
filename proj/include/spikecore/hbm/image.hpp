#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spikecore/hbm/layout.hpp"
#include "spikecore/network.hpp"

namespace spikecore::hbm {

/// Maps user keys to hardware indices. Neuron-to-model membership lives in
/// the model section of the image itself.
class SymbolTable {
public:
    SymbolTable() = default;
    SymbolTable(std::vector<std::string> model_names, std::vector<std::string> axon_keys,
                std::vector<std::string> neuron_keys, std::vector<std::uint32_t> bias_axons);

    const std::vector<std::string>& model_names() const noexcept { return model_names_; }
    const std::vector<std::string>& axon_keys() const noexcept { return axon_keys_; }
    const std::vector<std::string>& neuron_keys() const noexcept { return neuron_keys_; }
    const std::vector<std::uint32_t>& bias_axons() const noexcept { return bias_axons_; }

    std::optional<std::uint32_t> find_axon(std::string_view key) const;
    std::optional<std::uint32_t> find_neuron(std::string_view key) const;

    bool operator==(const SymbolTable& o) const
    {
        return model_names_ == o.model_names_ && axon_keys_ == o.axon_keys_ && neuron_keys_ == o.neuron_keys_ &&
               bias_axons_ == o.bias_axons_;
    }

private:
    std::vector<std::string> model_names_;
    std::vector<std::string> axon_keys_;
    std::vector<std::string> neuron_keys_;
    std::vector<std::uint32_t> bias_axons_;
    std::unordered_map<std::string, std::uint32_t> axon_lookup_;
    std::unordered_map<std::string, std::uint32_t> neuron_lookup_;
};

/// Compiled memory image: geometry, rows of slots, and the symbol table.
class HbmImage {
public:
    HbmImage() = default;
    HbmImage(HbmGeometry geometry, std::vector<std::uint64_t> slots, SymbolTable symtab, EngineConfig config);

    const HbmGeometry& geometry() const noexcept { return geometry_; }
    const SymbolTable& symtab() const noexcept { return symtab_; }
    const EngineConfig& config() const noexcept { return config_; }

    std::uint64_t num_rows() const noexcept { return slots_.size() / kSlotsPerRow; }
    std::size_t num_axons() const noexcept { return symtab_.axon_keys().size(); }
    std::size_t num_neurons() const noexcept { return symtab_.neuron_keys().size(); }
    std::size_t num_models() const noexcept { return symtab_.model_names().size(); }

    std::span<const std::uint64_t> slots() const noexcept { return slots_; }
    std::span<const std::uint64_t> row(std::uint64_t r) const;
    std::uint64_t slot(std::uint64_t r, unsigned s) const { return slots_.at(r * kSlotsPerRow + s); }
    void set_slot(std::uint64_t r, unsigned s, std::uint64_t value) { slots_.at(r * kSlotsPerRow + s) = value; }

    /// Row and slot holding the pointer of the given axon / neuron.
    std::pair<std::uint64_t, unsigned> axon_pointer_location(std::uint32_t axon) const;
    std::pair<std::uint64_t, unsigned> neuron_pointer_location(std::uint32_t neuron) const;
    PointerSlot axon_pointer(std::uint32_t axon) const;
    PointerSlot neuron_pointer(std::uint32_t neuron) const;

    std::vector<ModelGroup> model_groups() const;

    bool operator==(const HbmImage& o) const
    {
        return geometry_ == o.geometry_ && slots_ == o.slots_ && symtab_ == o.symtab_ && config_ == o.config_;
    }

private:
    HbmGeometry geometry_;
    std::vector<std::uint64_t> slots_;
    SymbolTable symtab_;
    EngineConfig config_;
};

/// Binary image file: fixed little-endian header, symbol table, then rows.
/// Bit-exact and versioned; read_image throws CorruptImage or IoError.
void write_image(std::ostream& out, const HbmImage& image);
HbmImage read_image(std::istream& in);
void save_image(const std::string& path, const HbmImage& image);
HbmImage load_image(const std::string& path);

inline constexpr char kImageMagic[8] = {'S', 'P', 'K', 'C', 'H', 'B', 'M', '\0'};
inline constexpr std::uint32_t kImageVersion = 1;

} // namespace spikecore::hbm
