#pragma once

// Test-side model of Global Superstore order lines. Oracles in the tests
// compute their answers from these records directly, never through the
// engine's columns.

#include "storeboard/ingest.hpp"
#include "storeboard/star_model.hpp"

#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fixture {

struct Line {
    std::string order_id;
    std::string order_date = "01-01-2012"; // DD-MM-YYYY, as in the public file
    std::string ship_date = "03-01-2012";
    std::string ship_mode = "Standard Class";
    std::string customer_id = "C-1";
    std::string customer_name = "Customer One";
    std::string segment = "Consumer";
    std::string city = "Sydney";
    std::string country = "Australia";
    std::string market = "APAC";
    std::string region = "Oceania";
    std::string product_id = "P-1";
    std::string category = "Furniture";
    std::string sub_category = "Tables";
    std::string product_name = "Table";
    double sales = 100;
    int quantity = 1;
    double discount = 0;
    double profit = 10;
    double shipping_cost = 5;
    std::optional<double> shipping_payment;
};

// Serializes lines to CSV with the public header (plus "Shipping Payment"
// when any line carries one).
std::string to_csv(std::span<const Line> lines);

storeboard::StarSchema schema_of(std::span<const Line> lines,
                                 const storeboard::FeeTable& fees = storeboard::FeeTable::calibrated_default());

// Small random tables with heavy value collisions, for oracle comparisons.
// Every line gets an explicit shipping payment when with_payment is set.
std::vector<Line> random_lines(std::mt19937_64& rng, std::size_t n, bool with_payment = false);

// Global-Superstore-shaped synthetic data: 4 ship modes, 7 markets,
// 3 categories / 17 sub-categories, dates in 2011-2014. Deterministic in seed.
std::vector<Line> synthetic_superstore(std::size_t rows, std::uint64_t seed = 7);

// Field access by canonical column name; dates come back as ISO text to
// match the engine's key rendering.
storeboard::Scalar value_of(const Line& line, const std::string& column);

std::string iso_of(const std::string& dmy);

} // namespace fixture
