#include "storeboard/snapshot.hpp"

#include "storeboard/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace storeboard {

namespace {

constexpr std::string_view kMagic = "SBRD";

enum class Encoding : std::uint8_t { Float64 = 1, Int32 = 2, Dictionary = 3 };

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, bytes, sizeof(T));
        return v;
    }
}

class Writer {
  public:
    template <typename T>
    void put(T v) {
        v = to_little(v);
        buffer_.append(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void put_string(std::string_view s) {
        put(static_cast<std::uint32_t>(s.size()));
        buffer_.append(s);
    }
    template <typename T>
    void put_array(const std::vector<T>& values) {
        if constexpr (std::endian::native == std::endian::little) {
            buffer_.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(T));
        } else {
            for (auto v : values) {
                put(v);
            }
        }
    }
    std::size_t size() const { return buffer_.size(); }
    std::string& bytes() { return buffer_; }

  private:
    std::string buffer_;
};

class Reader {
  public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }
    std::string get_string() {
        auto n = get<std::uint32_t>();
        need(n);
        std::string s(bytes_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    template <typename T>
    std::vector<T> get_array(std::size_t count) {
        if (count > (bytes_.size() - pos_) / sizeof(T)) {
            throw SnapshotError("truncated snapshot");
        }
        std::vector<T> out(count);
        if (count > 0) {
            std::memcpy(out.data(), bytes_.data() + pos_, count * sizeof(T));
        }
        pos_ += count * sizeof(T);
        if constexpr (std::endian::native != std::endian::little) {
            for (auto& v : out) {
                v = to_little(v);
            }
        }
        return out;
    }
    void seek(std::size_t pos) {
        if (pos > bytes_.size()) {
            throw SnapshotError("offset out of range");
        }
        pos_ = pos;
    }
    std::size_t pos() const { return pos_; }

  private:
    void need(std::size_t n) const {
        if (n > bytes_.size() - pos_) {
            throw SnapshotError("truncated snapshot");
        }
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void write_column_data(Writer& data, const Column& c, Encoding& enc, std::uint32_t& dict_size) {
    if (c.is_numeric()) {
        enc = Encoding::Float64;
        data.put_array(c.numbers());
    } else if (c.is_date()) {
        enc = Encoding::Int32;
        data.put_array(c.days());
    } else {
        enc = Encoding::Dictionary;
        data.put_array(c.codes());
        dict_size = static_cast<std::uint32_t>(c.dictionary_values().size());
        for (const auto& s : c.dictionary_values()) {
            data.put_string(s);
        }
    }
}

void write_table(Writer& dir, Writer& data, const ColumnTable& t) {
    dir.put_string(t.name());
    dir.put(static_cast<std::uint8_t>(t.key_column() ? 1 : 0));
    dir.put_string(t.key_column().value_or(""));
    dir.put(static_cast<std::uint64_t>(t.row_count()));
    dir.put(static_cast<std::uint32_t>(t.columns().size()));
    for (const auto& c : t.columns()) {
        auto offset = data.size();
        Encoding enc{};
        std::uint32_t dict_size = 0;
        write_column_data(data, c, enc, dict_size);
        dir.put_string(c.name());
        dir.put(static_cast<std::uint8_t>(c.kind()));
        dir.put(static_cast<std::uint8_t>(enc));
        dir.put(static_cast<std::uint64_t>(offset));
        dir.put(static_cast<std::uint64_t>(data.size() - offset));
        dir.put(dict_size);
    }
}

ColumnTable read_table(Reader& dir, std::string_view data_section) {
    auto name = dir.get_string();
    bool has_key = dir.get<std::uint8_t>() != 0;
    auto key = dir.get_string();
    auto rows = dir.get<std::uint64_t>();
    auto ncols = dir.get<std::uint32_t>();
    std::vector<Column> columns;
    columns.reserve(ncols);
    for (std::uint32_t i = 0; i < ncols; ++i) {
        auto cname = dir.get_string();
        auto kind_byte = dir.get<std::uint8_t>();
        auto enc = static_cast<Encoding>(dir.get<std::uint8_t>());
        auto offset = dir.get<std::uint64_t>();
        auto length = dir.get<std::uint64_t>();
        auto dict_size = dir.get<std::uint32_t>();
        if (kind_byte > static_cast<std::uint8_t>(ColumnKind::Date)) {
            throw SnapshotError("bad column kind in " + name + "." + cname);
        }
        if (offset > data_section.size() || length > data_section.size() - offset) {
            throw SnapshotError("column data out of range in " + name + "." + cname);
        }
        auto kind = static_cast<ColumnKind>(kind_byte);
        Reader col(data_section.substr(offset, length));
        switch (enc) {
        case Encoding::Float64:
            columns.push_back(Column::numeric(cname, kind, col.get_array<double>(rows)));
            break;
        case Encoding::Int32:
            columns.push_back(Column::dates(cname, col.get_array<DayNumber>(rows)));
            break;
        case Encoding::Dictionary: {
            auto codes = col.get_array<std::uint32_t>(rows);
            std::vector<std::string> dict;
            dict.reserve(dict_size);
            for (std::uint32_t d = 0; d < dict_size; ++d) {
                dict.push_back(col.get_string());
            }
            columns.push_back(Column::dictionary(cname, kind, std::move(codes), std::move(dict)));
            break;
        }
        default:
            throw SnapshotError("bad column encoding in " + name + "." + cname);
        }
    }
    return ColumnTable(std::move(name), std::move(columns),
                       has_key ? std::optional<std::string>(key) : std::nullopt);
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string serialize_snapshot(const StarSchema& schema) {
    Writer dir;
    Writer data;
    const auto& meta = schema.metadata();
    dir.put_string(meta.source_path);
    dir.put(meta.raw_rows);
    dir.put(meta.rejected_rows);
    dir.put(meta.encoding_fallbacks);
    dir.put_string(meta.date_format);
    dir.put_string(meta.shipping_payment_source);
    dir.put_string(meta.fee_table_digest);

    dir.put(static_cast<std::uint32_t>(schema.relationships().size()));
    for (const auto& r : schema.relationships()) {
        dir.put_string(r.fact_column);
        dir.put_string(r.dimension);
        dir.put_string(r.key_column);
    }
    dir.put(static_cast<std::uint32_t>(1 + schema.dimensions().size()));
    write_table(dir, data, schema.fact());
    for (const auto& d : schema.dimensions()) {
        write_table(dir, data, d);
    }

    Writer out;
    out.bytes().append(kMagic);
    out.put(kSnapshotVersion);
    out.put(static_cast<std::uint64_t>(dir.size()));
    out.bytes().append(dir.bytes());
    out.bytes().append(data.bytes());
    out.put(fnv1a64(out.bytes()));
    return std::move(out.bytes());
}

StarSchema deserialize_snapshot(std::string_view bytes) {
    if (bytes.size() < kMagic.size() + 4 + 8 + 8 || bytes.substr(0, 4) != kMagic) {
        throw SnapshotError("not a snapshot (bad magic)");
    }
    Reader trailer(bytes.substr(bytes.size() - 8));
    if (trailer.get<std::uint64_t>() != fnv1a64(bytes.substr(0, bytes.size() - 8))) {
        throw SnapshotError("snapshot checksum mismatch");
    }
    Reader head(bytes);
    head.seek(4);
    auto version = head.get<std::uint32_t>();
    if (version != kSnapshotVersion) {
        throw SnapshotError("unsupported snapshot version " + std::to_string(version));
    }
    auto dir_len = head.get<std::uint64_t>();
    auto dir_start = head.pos();
    if (dir_len > bytes.size() - 8 - dir_start) {
        throw SnapshotError("directory out of range");
    }
    auto directory = bytes.substr(dir_start, dir_len);
    auto data_section = bytes.substr(dir_start + dir_len, bytes.size() - 8 - dir_start - dir_len);

    Reader dir(directory);
    SchemaMetadata meta;
    meta.source_path = dir.get_string();
    meta.raw_rows = dir.get<std::uint64_t>();
    meta.rejected_rows = dir.get<std::uint64_t>();
    meta.encoding_fallbacks = dir.get<std::uint64_t>();
    meta.date_format = dir.get_string();
    meta.shipping_payment_source = dir.get_string();
    meta.fee_table_digest = dir.get_string();

    std::vector<Relationship> rels(dir.get<std::uint32_t>());
    for (auto& r : rels) {
        r.fact_column = dir.get_string();
        r.dimension = dir.get_string();
        r.key_column = dir.get_string();
    }
    auto ntables = dir.get<std::uint32_t>();
    if (ntables == 0) {
        throw SnapshotError("snapshot has no fact table");
    }
    auto fact = read_table(dir, data_section);
    std::vector<ColumnTable> dims;
    for (std::uint32_t i = 1; i < ntables; ++i) {
        dims.push_back(read_table(dir, data_section));
    }
    try {
        return StarSchema(std::move(fact), std::move(dims), std::move(rels), std::move(meta));
    } catch (const SnapshotError&) {
        throw;
    } catch (const Error& e) {
        throw SnapshotError(std::string("inconsistent snapshot: ") + e.what());
    }
}

void write_snapshot(const StarSchema& schema, const std::filesystem::path& path) {
    auto bytes = serialize_snapshot(schema);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw SnapshotError("cannot write snapshot: " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw SnapshotError("short write: " + path.string());
    }
}

StarSchema read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in || std::filesystem::is_directory(path)) {
        throw FileNotFound(path.string());
    }
    in.seekg(0, std::ios::end);
    std::string bytes(static_cast<std::size_t>(in.tellg()), '\0');
    in.seekg(0);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    return deserialize_snapshot(bytes);
}

} // namespace storeboard
