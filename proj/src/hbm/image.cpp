#include "spikecore/hbm/image.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

#include "spikecore/error.hpp"

namespace spikecore::hbm {

SymbolTable::SymbolTable(std::vector<std::string> model_names, std::vector<std::string> axon_keys,
                         std::vector<std::string> neuron_keys, std::vector<std::uint32_t> bias_axons)
    : model_names_(std::move(model_names))
    , axon_keys_(std::move(axon_keys))
    , neuron_keys_(std::move(neuron_keys))
    , bias_axons_(std::move(bias_axons))
{
    for (std::uint32_t i = 0; i < axon_keys_.size(); ++i) {
        if (!axon_lookup_.emplace(axon_keys_[i], i).second) {
            throw Error(ErrorCode::CorruptImage, "duplicate axon key '" + axon_keys_[i] + "' in symbol table");
        }
    }
    for (std::uint32_t i = 0; i < neuron_keys_.size(); ++i) {
        if (!neuron_lookup_.emplace(neuron_keys_[i], i).second) {
            throw Error(ErrorCode::CorruptImage, "duplicate neuron key '" + neuron_keys_[i] + "' in symbol table");
        }
    }
    for (auto b : bias_axons_) {
        if (b >= axon_keys_.size()) {
            throw Error(ErrorCode::CorruptImage, "bias axon index out of range");
        }
    }
}

std::optional<std::uint32_t> SymbolTable::find_axon(std::string_view key) const
{
    auto it = axon_lookup_.find(std::string(key));
    return it == axon_lookup_.end() ? std::nullopt : std::optional(it->second);
}

std::optional<std::uint32_t> SymbolTable::find_neuron(std::string_view key) const
{
    auto it = neuron_lookup_.find(std::string(key));
    return it == neuron_lookup_.end() ? std::nullopt : std::optional(it->second);
}

HbmImage::HbmImage(HbmGeometry geometry, std::vector<std::uint64_t> slots, SymbolTable symtab, EngineConfig config)
    : geometry_(geometry)
    , slots_(std::move(slots))
    , symtab_(std::move(symtab))
    , config_(config)
{
    const auto& g = geometry_;
    const bool ordered = g.models.begin == 0 && g.models.end == g.axon_pointers.begin &&
                         g.axon_pointers.end == g.neuron_pointers.begin &&
                         g.neuron_pointers.end == g.synapses.begin && g.synapses.begin <= g.synapses.end &&
                         g.models.begin <= g.models.end && g.axon_pointers.begin <= g.axon_pointers.end &&
                         g.neuron_pointers.begin <= g.neuron_pointers.end;
    if (!ordered) {
        throw Error(ErrorCode::CorruptImage, "sections are not contiguous and ordered");
    }
    for (const Section* s : {&g.models, &g.axon_pointers, &g.neuron_pointers, &g.synapses}) {
        if (s->begin % kRowsPerSegment != 0 || s->end % kRowsPerSegment != 0) {
            throw Error(ErrorCode::CorruptImage, "section not aligned to segments");
        }
    }
    if (slots_.size() != g.used_rows() * kSlotsPerRow) {
        throw Error(ErrorCode::CorruptImage, "row storage does not match geometry");
    }
    if (g.used_rows() > g.capacity_rows) {
        throw Error(ErrorCode::CapacityExceeded, "image exceeds capacity");
    }
    if (g.models.rows() < rows_for_slots(num_models() * kModelSlots) ||
        g.axon_pointers.rows() < rows_for_slots(num_axons()) ||
        g.neuron_pointers.rows() < rows_for_slots(num_neurons())) {
        throw Error(ErrorCode::CorruptImage, "section too small for symbol table");
    }
}

std::span<const std::uint64_t> HbmImage::row(std::uint64_t r) const
{
    if (r >= num_rows()) {
        throw Error(ErrorCode::IndexOutOfRange, "row " + std::to_string(r) + " beyond image");
    }
    return std::span<const std::uint64_t>(slots_).subspan(r * kSlotsPerRow, kSlotsPerRow);
}

std::pair<std::uint64_t, unsigned> HbmImage::axon_pointer_location(std::uint32_t axon) const
{
    return {geometry_.axon_pointers.begin + axon / kSlotsPerRow, axon % kSlotsPerRow};
}

std::pair<std::uint64_t, unsigned> HbmImage::neuron_pointer_location(std::uint32_t neuron) const
{
    return {geometry_.neuron_pointers.begin + neuron / kSlotsPerRow, neuron % kSlotsPerRow};
}

PointerSlot HbmImage::axon_pointer(std::uint32_t axon) const
{
    if (axon >= num_axons()) {
        throw Error(ErrorCode::IndexOutOfRange, "axon " + std::to_string(axon));
    }
    const auto [r, s] = axon_pointer_location(axon);
    return PointerSlot::decode(slot(r, s));
}

PointerSlot HbmImage::neuron_pointer(std::uint32_t neuron) const
{
    if (neuron >= num_neurons()) {
        throw Error(ErrorCode::IndexOutOfRange, "neuron " + std::to_string(neuron));
    }
    const auto [r, s] = neuron_pointer_location(neuron);
    return PointerSlot::decode(slot(r, s));
}

std::vector<ModelGroup> HbmImage::model_groups() const
{
    std::vector<ModelGroup> groups;
    groups.reserve(num_models());
    for (std::size_t m = 0; m < num_models(); ++m) {
        const std::uint64_t base = geometry_.models.begin * kSlotsPerRow + m * kModelSlots;
        groups.push_back(ModelGroup::decode(slots_.at(base), slots_.at(base + 1)));
    }
    return groups;
}

// ---------------------------------------------------------------------------
// File format

namespace {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <typename T>
    void put(T value)
    {
        static_assert(std::is_integral_v<T>);
        std::array<char, sizeof(T)> bytes{};
        auto u = static_cast<std::make_unsigned_t<T>>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
        }
        out_.write(bytes.data(), bytes.size());
    }

    void put_string(const std::string& s)
    {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    void put_section(const Section& s)
    {
        put<std::uint64_t>(s.begin);
        put<std::uint64_t>(s.end);
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    template <typename T>
    T get()
    {
        std::array<unsigned char, sizeof(T)> bytes{};
        in_.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
        if (!in_) {
            throw Error(ErrorCode::CorruptImage, "truncated image file");
        }
        std::make_unsigned_t<T> u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            u |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
        }
        return static_cast<T>(u);
    }

    std::string get_string()
    {
        const auto len = get<std::uint32_t>();
        if (len > (1U << 20)) {
            throw Error(ErrorCode::CorruptImage, "symbol of implausible length");
        }
        std::string s(len, '\0');
        in_.read(s.data(), len);
        if (!in_) {
            throw Error(ErrorCode::CorruptImage, "truncated symbol table");
        }
        return s;
    }

    Section get_section()
    {
        Section s;
        s.begin = get<std::uint64_t>();
        s.end = get<std::uint64_t>();
        return s;
    }

private:
    std::istream& in_;
};

constexpr std::uint32_t kFlagSaturating = 1;

} // namespace

void write_image(std::ostream& out, const HbmImage& image)
{
    Writer w(out);
    out.write(kImageMagic, sizeof(kImageMagic));
    const auto& g = image.geometry();
    w.put<std::uint32_t>(kImageVersion);
    w.put<std::uint32_t>(kSlotBits);
    w.put<std::uint32_t>(kSlotsPerRow);
    w.put<std::uint32_t>(kRowsPerSegment);
    w.put<std::uint64_t>(g.capacity_rows);
    w.put_section(g.models);
    w.put_section(g.axon_pointers);
    w.put_section(g.neuron_pointers);
    w.put_section(g.synapses);
    const auto& st = image.symtab();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(st.model_names().size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(st.axon_keys().size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(st.neuron_keys().size()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(st.bias_axons().size()));
    w.put<std::uint32_t>(image.config().saturating ? kFlagSaturating : 0);
    w.put<std::uint32_t>(image.config().max_fan_out);
    w.put<std::uint64_t>(image.num_rows());
    for (const auto& s : st.model_names()) {
        w.put_string(s);
    }
    for (const auto& s : st.axon_keys()) {
        w.put_string(s);
    }
    for (const auto& s : st.neuron_keys()) {
        w.put_string(s);
    }
    for (auto b : st.bias_axons()) {
        w.put<std::uint32_t>(b);
    }
    for (auto slot : image.slots()) {
        w.put<std::uint64_t>(slot);
    }
    if (!out) {
        throw Error(ErrorCode::IoError, "failed writing image");
    }
}

HbmImage read_image(std::istream& in)
{
    char magic[sizeof(kImageMagic)];
    in.read(magic, sizeof(magic));
    if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kImageMagic))) {
        throw Error(ErrorCode::CorruptImage, "bad magic");
    }
    Reader r(in);
    const auto version = r.get<std::uint32_t>();
    if (version != kImageVersion) {
        throw Error(ErrorCode::CorruptImage, "unsupported image version " + std::to_string(version));
    }
    if (r.get<std::uint32_t>() != kSlotBits || r.get<std::uint32_t>() != kSlotsPerRow ||
        r.get<std::uint32_t>() != kRowsPerSegment) {
        throw Error(ErrorCode::CorruptImage, "unsupported geometry");
    }
    HbmGeometry g;
    g.capacity_rows = r.get<std::uint64_t>();
    g.models = r.get_section();
    g.axon_pointers = r.get_section();
    g.neuron_pointers = r.get_section();
    g.synapses = r.get_section();
    const auto n_models = r.get<std::uint32_t>();
    const auto n_axons = r.get<std::uint32_t>();
    const auto n_neurons = r.get<std::uint32_t>();
    const auto n_bias = r.get<std::uint32_t>();
    const auto flags = r.get<std::uint32_t>();
    EngineConfig cfg;
    cfg.saturating = (flags & kFlagSaturating) != 0;
    cfg.max_fan_out = r.get<std::uint32_t>();
    const auto n_rows = r.get<std::uint64_t>();
    if (n_rows != g.used_rows() || n_rows > g.capacity_rows || n_neurons > kMaxNeurons) {
        throw Error(ErrorCode::CorruptImage, "row count disagrees with geometry");
    }

    std::vector<std::string> models, axons, neurons;
    std::vector<std::uint32_t> bias;
    for (std::uint32_t i = 0; i < n_models; ++i) {
        models.push_back(r.get_string());
    }
    for (std::uint32_t i = 0; i < n_axons; ++i) {
        axons.push_back(r.get_string());
    }
    for (std::uint32_t i = 0; i < n_neurons; ++i) {
        neurons.push_back(r.get_string());
    }
    for (std::uint32_t i = 0; i < n_bias; ++i) {
        bias.push_back(r.get<std::uint32_t>());
    }
    std::vector<std::uint64_t> slots;
    slots.reserve(n_rows * kSlotsPerRow);
    for (std::uint64_t i = 0; i < n_rows * kSlotsPerRow; ++i) {
        slots.push_back(r.get<std::uint64_t>());
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorCode::CorruptImage, "trailing bytes after rows");
    }
    return HbmImage(g, std::move(slots), SymbolTable(std::move(models), std::move(axons), std::move(neurons),
                                                     std::move(bias)),
                    cfg);
}

void save_image(const std::string& path, const HbmImage& image)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    }
    write_image(out, image);
}

HbmImage load_image(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    }
    return read_image(in);
}

} // namespace spikecore::hbm
