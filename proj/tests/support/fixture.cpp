#include "fixture.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <stdexcept>

namespace fixture {

namespace {

std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

struct Geo {
    const char* city;
    const char* country;
    const char* market;
    const char* region;
};

constexpr std::array<Geo, 14> kGeos{{
    {"Sydney", "Australia", "APAC", "Oceania"},
    {"Jakarta", "Indonesia", "APAC", "Southeast Asia"},
    {"Paris", "France", "EU", "Central"},
    {"Berlin", "Germany", "EU", "Central"},
    {"New York City", "United States", "US", "East"},
    {"Los Angeles", "United States", "US", "West"},
    {"Mexico City", "Mexico", "LATAM", "North"},
    {"Sao Paulo", "Brazil", "LATAM", "South"},
    {"Lagos", "Nigeria", "Africa", "Africa"},
    {"Cairo", "Egypt", "Africa", "Africa"},
    {"Istanbul", "Turkey", "EMEA", "EMEA"},
    {"Kyiv", "Ukraine", "EMEA", "EMEA"},
    {"Toronto", "Canada", "Canada", "Canada"},
    {"Montreal", "Canada", "Canada", "Canada"},
}};

struct SubCat {
    const char* category;
    const char* name;
};

constexpr std::array<SubCat, 17> kSubCats{{
    {"Furniture", "Bookcases"},        {"Furniture", "Chairs"},
    {"Furniture", "Furnishings"},      {"Furniture", "Tables"},
    {"Office Supplies", "Appliances"}, {"Office Supplies", "Art"},
    {"Office Supplies", "Binders"},    {"Office Supplies", "Envelopes"},
    {"Office Supplies", "Fasteners"},  {"Office Supplies", "Labels"},
    {"Office Supplies", "Paper"},      {"Office Supplies", "Storage"},
    {"Office Supplies", "Supplies"},   {"Technology", "Accessories"},
    {"Technology", "Copiers"},         {"Technology", "Machines"},
    {"Technology", "Phones"},
}};

constexpr std::array<const char*, 4> kModes{"First Class", "Same Day", "Second Class", "Standard Class"};
constexpr std::array<const char*, 3> kSegments{"Consumer", "Corporate", "Home Office"};
constexpr std::array<double, 8> kDiscounts{0, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6};

std::string dmy(int day_of_epoch_offset) {
    // Days from 2011-01-01 rendered as DD-MM-YYYY.
    static const int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int y = 2011;
    int d = day_of_epoch_offset;
    for (;;) {
        int len = (y % 4 == 0) ? 366 : 365;
        if (d < len) {
            break;
        }
        d -= len;
        ++y;
    }
    int m = 0;
    for (;; ++m) {
        int len = kDays[m] + (m == 1 && y % 4 == 0 ? 1 : 0);
        if (d < len) {
            break;
        }
        d -= len;
    }
    return fmt::format("{:02}-{:02}-{}", d + 1, m + 1, y);
}

double cents(double v) { return std::round(v * 100) / 100; }

} // namespace

std::string iso_of(const std::string& dmy_text) {
    return dmy_text.substr(6, 4) + "-" + dmy_text.substr(3, 2) + "-" + dmy_text.substr(0, 2);
}

std::string to_csv(std::span<const Line> lines) {
    bool payment = false;
    for (const auto& l : lines) {
        payment = payment || l.shipping_payment.has_value();
    }
    std::string out =
        "Row ID,Order ID,Order Date,Ship Date,Ship Mode,Customer ID,Customer Name,Segment,City,"
        "State,Country,Market,Region,Product ID,Category,Sub-Category,Product Name,Sales,Quantity,"
        "Discount,Profit,Shipping Cost,Order Priority";
    if (payment) {
        out += ",Shipping Payment";
    }
    out += "\n";
    std::size_t row = 0;
    for (const auto& l : lines) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", ++row,
                           quote(l.order_id), l.order_date, l.ship_date, quote(l.ship_mode),
                           quote(l.customer_id), quote(l.customer_name), quote(l.segment),
                           quote(l.city), "State", quote(l.country), quote(l.market), quote(l.region),
                           quote(l.product_id), quote(l.category), quote(l.sub_category),
                           quote(l.product_name), l.sales, l.quantity, l.discount, l.profit,
                           l.shipping_cost, "Medium");
        if (payment) {
            out += l.shipping_payment ? fmt::format(",{}", *l.shipping_payment) : std::string(",");
        }
        out += "\n";
    }
    return out;
}

storeboard::StarSchema schema_of(std::span<const Line> lines, const storeboard::FeeTable& fees) {
    auto raw = storeboard::parse_dataset(to_csv(lines), "fixture.csv", storeboard::superstore_columns());
    if (raw.row_count != lines.size()) {
        throw std::logic_error("fixture rows were rejected");
    }
    return storeboard::build_star_schema(raw, fees);
}

std::vector<Line> random_lines(std::mt19937_64& rng, std::size_t n, bool with_payment) {
    auto pick = [&](int hi) { return std::uniform_int_distribution<int>(0, hi - 1)(rng); };
    std::vector<Line> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Line l;
        l.order_id = fmt::format("O-{}", pick(std::max<int>(2, static_cast<int>(n) / 2)));
        l.order_date = dmy(pick(40) * 30);
        l.ship_date = l.order_date;
        l.ship_mode = kModes[pick(4)];
        int cust = pick(8);
        l.customer_id = fmt::format("C-{}", cust);
        l.customer_name = fmt::format("Customer {}", cust);
        l.segment = kSegments[cust % 3];
        const auto& g = kGeos[pick(6) * 2 % 14];
        l.city = g.city;
        l.country = g.country;
        l.market = g.market;
        l.region = g.region;
        int prod = pick(12);
        const auto& sc = kSubCats[prod % 5 + (prod % 3) * 4];
        l.product_id = fmt::format("P-{}", prod);
        l.category = sc.category;
        l.sub_category = sc.name;
        l.product_name = fmt::format("Product {}", prod);
        l.quantity = 1 + pick(5);
        l.sales = cents(5 + pick(500) * 1.37);
        l.discount = kDiscounts[pick(6)];
        l.profit = cents((pick(200) - 80) * 0.91);
        l.shipping_cost = cents(pick(60) * 0.5);
        if (with_payment) {
            l.shipping_payment = cents(pick(60) * 0.25);
        }
        out.push_back(std::move(l));
    }
    return out;
}

std::vector<Line> synthetic_superstore(std::size_t rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t hi) { return std::uniform_int_distribution<std::size_t>(0, hi - 1)(rng); };
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t customers = 1590;
    const std::size_t products = 10292;
    std::vector<Line> out;
    out.reserve(rows);
    std::size_t order = 0;
    while (out.size() < rows) {
        ++order;
        std::size_t cust = pick(customers);
        int day = static_cast<int>(pick(1461));
        const auto& g = kGeos[pick(kGeos.size())];
        const char* mode = kModes[pick(4)];
        std::size_t lines_in_order = 1 + pick(3);
        for (std::size_t j = 0; j < lines_in_order && out.size() < rows; ++j) {
            Line l;
            l.order_id = fmt::format("{}-{}-{}", g.country[0], 2011 + day / 366, 100000 + order);
            l.order_date = dmy(day);
            l.ship_date = dmy(std::min(day + 4, 1460));
            l.ship_mode = mode;
            l.customer_id = fmt::format("CU-{:05}", cust);
            l.customer_name = fmt::format("Customer {:05}", cust);
            l.segment = kSegments[cust % 3];
            l.city = g.city;
            l.country = g.country;
            l.market = g.market;
            l.region = g.region;
            std::size_t prod = pick(products);
            const auto& sc = kSubCats[prod % kSubCats.size()];
            l.product_id = fmt::format("{:.3}-{:.2}-{:08}", sc.category, sc.name, prod);
            l.category = sc.category;
            l.sub_category = sc.name;
            l.product_name = fmt::format("{} item {}", sc.name, prod);
            l.quantity = static_cast<int>(1 + pick(9));
            l.sales = cents(10 + unit(rng) * 480);
            l.discount = kDiscounts[pick(kDiscounts.size())];
            l.profit = cents(l.sales * (0.25 - l.discount) * unit(rng) * 1.2);
            l.shipping_cost = cents(l.sales * 0.1 * unit(rng));
            out.push_back(std::move(l));
        }
    }
    return out;
}

storeboard::Scalar value_of(const Line& l, const std::string& column) {
    using storeboard::Scalar;
    if (column == "OrderID") return l.order_id;
    if (column == "OrderDate" || column == "Date") return iso_of(l.order_date);
    if (column == "ShipDate") return iso_of(l.ship_date);
    if (column == "ShipMode") return l.ship_mode;
    if (column == "CustomerID") return l.customer_id;
    if (column == "CustomerName") return l.customer_name;
    if (column == "Segment") return l.segment;
    if (column == "City") return l.city;
    if (column == "Country") return l.country;
    if (column == "Market") return l.market;
    if (column == "Region") return l.region;
    if (column == "ProductID") return l.product_id;
    if (column == "Category") return l.category;
    if (column == "SubCategory") return l.sub_category;
    if (column == "ProductName") return l.product_name;
    if (column == "Sales") return l.sales;
    if (column == "Quantity") return static_cast<double>(l.quantity);
    if (column == "Discount") return l.discount;
    if (column == "Profit") return l.profit;
    if (column == "ShippingCost") return l.shipping_cost;
    if (column == "ShippingPayment") return l.shipping_payment ? Scalar(*l.shipping_payment) : Scalar();
    if (column == "Year") return static_cast<double>(std::stoi(l.order_date.substr(6, 4)));
    throw std::invalid_argument("fixture has no column " + column);
}

} // namespace fixture
