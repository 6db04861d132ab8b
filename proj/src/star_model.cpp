#include "storeboard/star_model.hpp"

#include "storeboard/error.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>

namespace storeboard {

ColumnRef ColumnRef::parse(std::string_view text) {
    auto open = text.find('[');
    if (open != std::string_view::npos && !text.empty() && text.back() == ']') {
        return {std::string(text.substr(0, open)),
                std::string(text.substr(open + 1, text.size() - open - 2))};
    }
    return {"", std::string(text)};
}

std::string ColumnRef::to_string() const {
    return table.empty() ? column : table + "[" + column + "]";
}

RowSelection::RowSelection(std::size_t universe, bool all)
    : universe_(universe), words_((universe + 63) / 64, all ? ~std::uint64_t{0} : 0) {
    if (all && universe % 64 != 0) {
        words_.back() = (std::uint64_t{1} << (universe % 64)) - 1;
    }
}

std::size_t RowSelection::count() const {
    std::size_t n = 0;
    for (auto w : words_) {
        n += static_cast<std::size_t>(std::popcount(w));
    }
    return n;
}

RowSelection& RowSelection::operator&=(const RowSelection& other) {
    if (other.universe_ != universe_) {
        throw InvalidQuery("row selections over different tables");
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
        words_[i] &= other.words_[i];
    }
    return *this;
}

std::vector<std::uint32_t> RowSelection::ordinals() const {
    std::vector<std::uint32_t> out;
    out.reserve(count());
    for_each([&](std::uint32_t r) { out.push_back(r); });
    return out;
}

Range intersect(const Range& a, const Range& b) {
    Range r;
    if (a.lo > b.lo) {
        r.lo = a.lo;
        r.lo_inclusive = a.lo_inclusive;
    } else if (b.lo > a.lo) {
        r.lo = b.lo;
        r.lo_inclusive = b.lo_inclusive;
    } else {
        r.lo = a.lo;
        r.lo_inclusive = a.lo_inclusive && b.lo_inclusive;
    }
    if (a.hi < b.hi) {
        r.hi = a.hi;
        r.hi_inclusive = a.hi_inclusive;
    } else if (b.hi < a.hi) {
        r.hi = b.hi;
        r.hi_inclusive = b.hi_inclusive;
    } else {
        r.hi = a.hi;
        r.hi_inclusive = a.hi_inclusive && b.hi_inclusive;
    }
    return r;
}

ColumnPredicate ColumnPredicate::in(ColumnRef column, std::vector<std::string> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    ColumnPredicate p;
    p.column = std::move(column);
    p.in_sets.push_back(std::move(values));
    return p;
}

ColumnPredicate ColumnPredicate::between(ColumnRef column, Range range) {
    if (std::isnan(range.lo) || std::isnan(range.hi)) {
        throw InvalidQuery("range bound is NaN on " + column.to_string());
    }
    ColumnPredicate p;
    p.column = std::move(column);
    p.range = range;
    return p;
}

FilterContext& FilterContext::add(ColumnPredicate predicate) {
    for (auto& set : predicate.in_sets) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    auto it = std::lower_bound(
        predicates_.begin(), predicates_.end(), predicate.column,
        [](const ColumnPredicate& p, const ColumnRef& ref) { return p.column < ref; });
    if (it == predicates_.end() || it->column != predicate.column) {
        std::sort(predicate.in_sets.begin(), predicate.in_sets.end());
        predicate.in_sets.erase(std::unique(predicate.in_sets.begin(), predicate.in_sets.end()),
                                predicate.in_sets.end());
        predicates_.insert(it, std::move(predicate));
        return *this;
    }
    for (auto& set : predicate.in_sets) {
        it->in_sets.push_back(std::move(set));
    }
    std::sort(it->in_sets.begin(), it->in_sets.end());
    it->in_sets.erase(std::unique(it->in_sets.begin(), it->in_sets.end()), it->in_sets.end());
    if (predicate.range) {
        it->range = it->range ? intersect(*it->range, *predicate.range) : *predicate.range;
    }
    return *this;
}

FilterContext intersect(const FilterContext& a, const FilterContext& b) {
    FilterContext out = a;
    for (const auto& p : b.predicates()) {
        out.add(p);
    }
    return out;
}

namespace {

double parse_number_value(const ColumnRef& ref, const std::string& text) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw TypeMismatch("value '" + text + "' is not a number for column " + ref.to_string());
    }
    return v;
}

} // namespace

std::vector<char> predicate_mask(const Column& column, const ColumnPredicate& predicate) {
    const auto n = column.size();
    std::vector<char> mask(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
        if (column.is_missing(r)) {
            mask[r] = 0;
        }
    }
    if (column.is_dictionary()) {
        if (predicate.range) {
            throw TypeMismatch("range predicate on text column " + predicate.column.to_string());
        }
        const auto& dict = column.dictionary_values();
        const auto& codes = column.codes();
        for (const auto& set : predicate.in_sets) {
            std::vector<char> allowed(dict.size(), 0);
            for (std::size_t c = 0; c < dict.size(); ++c) {
                allowed[c] = std::binary_search(set.begin(), set.end(), dict[c]) ? 1 : 0;
            }
            for (std::size_t r = 0; r < n; ++r) {
                if (mask[r] && !allowed[codes[r]]) {
                    mask[r] = 0;
                }
            }
        }
        return mask;
    }

    for (const auto& set : predicate.in_sets) {
        std::vector<double> values;
        values.reserve(set.size());
        for (const auto& text : set) {
            if (column.is_date()) {
                auto day = parse_iso_date(text);
                if (!day) {
                    throw TypeMismatch("value '" + text + "' is not an ISO date for column " +
                                       predicate.column.to_string());
                }
                values.push_back(*day);
            } else {
                values.push_back(parse_number_value(predicate.column, text));
            }
        }
        std::sort(values.begin(), values.end());
        for (std::size_t r = 0; r < n; ++r) {
            if (mask[r] && !std::binary_search(values.begin(), values.end(), *column.number_at(r))) {
                mask[r] = 0;
            }
        }
    }
    if (predicate.range) {
        for (std::size_t r = 0; r < n; ++r) {
            if (mask[r] && !predicate.range->contains(*column.number_at(r))) {
                mask[r] = 0;
            }
        }
    }
    return mask;
}

StarSchema::StarSchema(ColumnTable fact, std::vector<ColumnTable> dimensions,
                       std::vector<Relationship> relationships, SchemaMetadata metadata)
    : fact_(std::move(fact)), dimensions_(std::move(dimensions)),
      relationships_(std::move(relationships)), metadata_(std::move(metadata)) {
    row_maps_.resize(dimensions_.size());
    std::vector<bool> mapped(dimensions_.size(), false);
    for (const auto& rel : relationships_) {
        const auto& fk = fact_.column(rel.fact_column);
        auto dim_index = static_cast<std::size_t>(-1);
        for (std::size_t i = 0; i < dimensions_.size(); ++i) {
            if (dimensions_[i].name() == rel.dimension) {
                dim_index = i;
            }
        }
        if (dim_index == static_cast<std::size_t>(-1)) {
            throw UnknownColumn(rel.dimension, rel.key_column);
        }
        if (mapped[dim_index]) {
            throw TypeMismatch("dimension '" + rel.dimension + "' has more than one relationship");
        }
        mapped[dim_index] = true;
        const auto& dim = dimensions_[dim_index];
        const auto& key = dim.column(rel.key_column);
        if (dim.key_column() != rel.key_column) {
            throw TypeMismatch("relationship target " + rel.dimension + "[" + rel.key_column +
                               "] is not the dimension key");
        }
        std::map<std::string, std::uint32_t> index;
        for (std::size_t r = 0; r < key.size(); ++r) {
            index.emplace(scalar_to_string(key.scalar_at(r)), static_cast<std::uint32_t>(r));
        }
        auto& row_map = row_maps_[dim_index];
        row_map.resize(fk.size());
        // Integer surrogate keys equal to the dimension ordinal take the fast path.
        bool ordinal_keys = key.is_numeric();
        if (ordinal_keys) {
            const auto& kv = key.numbers();
            for (std::size_t r = 0; r < kv.size() && ordinal_keys; ++r) {
                ordinal_keys = kv[r] == static_cast<double>(r);
            }
        }
        for (std::size_t r = 0; r < fk.size(); ++r) {
            if (fk.is_missing(r)) {
                throw DanglingKey("fact row " + std::to_string(r) + " has no " + rel.fact_column);
            }
            if (ordinal_keys && fk.is_numeric()) {
                double v = fk.numbers()[r];
                if (v >= 0 && v < static_cast<double>(key.size()) && v == std::floor(v)) {
                    row_map[r] = static_cast<std::uint32_t>(v);
                    continue;
                }
                throw DanglingKey("fact row " + std::to_string(r) + " references missing " +
                                  rel.dimension + " key");
            }
            auto it = index.find(scalar_to_string(fk.scalar_at(r)));
            if (it == index.end()) {
                throw DanglingKey("fact row " + std::to_string(r) + " references missing " +
                                  rel.dimension + " key " + scalar_to_string(fk.scalar_at(r)));
            }
            row_map[r] = it->second;
        }
    }
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        if (!mapped[i]) {
            throw TypeMismatch("dimension '" + dimensions_[i].name() + "' has no relationship");
        }
    }
}

const ColumnTable* StarSchema::dimension(std::string_view name) const {
    for (const auto& d : dimensions_) {
        if (d.name() == name) {
            return &d;
        }
    }
    return nullptr;
}

const ColumnTable* StarSchema::table(std::string_view name) const {
    if (name == fact_.name()) {
        return &fact_;
    }
    return dimension(name);
}

StarSchema::Binding StarSchema::bind(const ColumnRef& ref) const {
    if (ref.table.empty() || ref.table == fact_.name()) {
        if (const auto* c = fact_.find(ref.column)) {
            return {fact_.name(), c, nullptr};
        }
        if (!ref.table.empty()) {
            throw UnknownColumn(ref.table, ref.column);
        }
    }
    for (std::size_t i = 0; i < dimensions_.size(); ++i) {
        const auto& dim = dimensions_[i];
        if (!ref.table.empty() && ref.table != dim.name()) {
            continue;
        }
        if (const auto* c = dim.find(ref.column)) {
            return {dim.name(), c, &row_maps_[i]};
        }
    }
    throw UnknownColumn(ref.table, ref.column);
}

bool StarSchema::operator==(const StarSchema& other) const {
    return fact_ == other.fact_ && dimensions_ == other.dimensions_ &&
           relationships_ == other.relationships_ && metadata_ == other.metadata_;
}

RowSelection resolve_rows(const StarSchema& schema, const FilterContext& ctx) {
    RowSelection selection(schema.row_count(), true);
    for (const auto& predicate : ctx.predicates()) {
        auto binding = schema.bind(predicate.column);
        auto mask = predicate_mask(*binding.column, predicate);
        for (std::size_t r = 0; r < schema.row_count(); ++r) {
            if (!mask[binding.row(r)]) {
                selection.reset(r);
            }
        }
    }
    return selection;
}

} // namespace storeboard
