#include "cbfed/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <variant>
#include <vector>

namespace cbfed {

namespace {

using Value = std::variant<double, bool, std::string, std::vector<int>>;

struct Entry {
    Value value;
    int line;
    bool integral;
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string strip_comment(const std::string& s)
{
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"')
            quoted = !quoted;
        else if (s[i] == '#' && !quoted)
            return s.substr(0, i);
    }
    return s;
}

bool parse_number(const std::string& s, double& out, bool& integral)
{
    const char* end = s.data() + s.size();
    const char* first = s.data() + (!s.empty() && s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, end, out);
    if (ec != std::errc() || ptr != end)
        return false;
    integral = s.find_first_of(".eE") == std::string::npos;
    return true;
}

class Parser {
public:
    explicit Parser(std::string origin) : origin_(std::move(origin)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const
    {
        throw ConfigurationError(origin_ + ":" + std::to_string(line) + ": " + msg);
    }

    Entry parse_value(const std::string& text, int line) const
    {
        if (text.empty())
            fail(line, "missing value");
        if (text.front() == '"') {
            if (text.size() < 2 || text.back() != '"' || text.find('"', 1) != text.size() - 1)
                fail(line, "malformed string");
            return {text.substr(1, text.size() - 2), line, false};
        }
        if (text == "true" || text == "false")
            return {text == "true", line, false};
        if (text.front() == '[') {
            if (text.back() != ']')
                fail(line, "unterminated array");
            std::vector<int> items;
            std::string body = text.substr(1, text.size() - 2);
            std::size_t pos = 0;
            while (pos <= body.size()) {
                const auto comma = body.find(',', pos);
                const std::string item = trim(body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
                if (!item.empty()) {
                    double v;
                    bool integral;
                    if (!parse_number(item, v, integral) || !integral)
                        fail(line, "array items must be integers");
                    items.push_back(static_cast<int>(v));
                } else if (comma != std::string::npos) {
                    fail(line, "empty array item");
                }
                if (comma == std::string::npos)
                    break;
                pos = comma + 1;
            }
            return {items, line, false};
        }
        double v;
        bool integral;
        if (!parse_number(text, v, integral))
            fail(line, "cannot parse value '" + text + "'");
        return {v, line, integral};
    }

    std::map<std::string, Entry> read(std::istream& is) const
    {
        std::map<std::string, Entry> entries;
        std::string raw;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            const std::string s = trim(strip_comment(raw));
            if (s.empty())
                continue;
            if (s.front() == '[')
                fail(line, "section headers are not supported");
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                fail(line, "expected 'key = value'");
            const std::string key = trim(s.substr(0, eq));
            if (key.empty() || key.find_first_of(" \t\"") != std::string::npos)
                fail(line, "invalid key");
            if (entries.count(key))
                fail(line, "duplicate key '" + key + "'");
            entries.emplace(key, parse_value(trim(s.substr(eq + 1)), line));
        }
        return entries;
    }

    double number(const std::string& key, const Entry& e) const
    {
        if (!std::holds_alternative<double>(e.value))
            fail(e.line, "'" + key + "' must be a number");
        return std::get<double>(e.value);
    }

    long long integer(const std::string& key, const Entry& e) const
    {
        const double v = number(key, e);
        if (!e.integral)
            fail(e.line, "'" + key + "' must be an integer");
        return static_cast<long long>(v);
    }

    const std::string& string(const std::string& key, const Entry& e) const
    {
        if (!std::holds_alternative<std::string>(e.value))
            fail(e.line, "'" + key + "' must be a string");
        return std::get<std::string>(e.value);
    }

    bool boolean(const std::string& key, const Entry& e) const
    {
        if (!std::holds_alternative<bool>(e.value))
            fail(e.line, "'" + key + "' must be true or false");
        return std::get<bool>(e.value);
    }

    const std::vector<int>& list(const std::string& key, const Entry& e) const
    {
        if (!std::holds_alternative<std::vector<int>>(e.value))
            fail(e.line, "'" + key + "' must be an array of integers");
        return std::get<std::vector<int>>(e.value);
    }

private:
    std::string origin_;
};

} // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& origin)
{
    Parser parser(origin);
    auto entries = parser.read(is);

    ExperimentConfig cfg;
    if (auto it = entries.find("example"); it != entries.end()) {
        const long long id = parser.integer("example", it->second);
        if (id < 1 || id > 3)
            parser.fail(it->second.line, "example must be 1, 2 or 3");
        cfg = example_config(static_cast<int>(id));
        entries.erase(it);
    }

    for (const auto& [key, e] : entries) {
        auto num = [&] { return parser.number(key, e); };
        auto integer = [&] { return static_cast<int>(parser.integer(key, e)); };
        if (key == "mu")
            cfg.params.mu = num();
        else if (key == "alpha")
            cfg.params.alpha = num();
        else if (key == "beta")
            cfg.params.beta = num();
        else if (key == "kappa")
            cfg.params.kappa = num();
        else if (key == "r")
            cfg.params.r = num();
        else if (key == "q")
            cfg.params.q = num();
        else if (key == "a")
            cfg.law.a = num();
        else if (key == "b")
            cfg.law.b = num();
        else if (key == "rho")
            cfg.law.rho = num();
        else if (key == "eps_reg")
            cfg.law.eps_reg = num();
        else if (key == "eta")
            cfg.solver.eta = num();
        else if (key == "alpha1")
            cfg.weights.alpha1 = num();
        else if (key == "alpha2")
            cfg.weights.alpha2 = num();
        else if (key == "alpha3")
            cfg.weights.alpha3 = num();
        else if (key == "cost") {
            const std::string& v = parser.string(key, e);
            if (v == "R1")
                cfg.opt.cost = CostKind::r1;
            else if (v == "R2")
                cfg.opt.cost = CostKind::r2;
            else
                parser.fail(e.line, "cost must be \"R1\" or \"R2\"");
        } else if (key == "u_d")
            cfg.u_d = parser.string(key, e);
        else if (key == "p_d")
            cfg.p_d = parser.string(key, e);
        else if (key == "f0")
            cfg.f0 = parser.string(key, e);
        else if (key == "meshes")
            cfg.meshes = parser.list(key, e);
        else if (key == "reference")
            cfg.reference = integer();
        else if (key == "eps_hvi")
            cfg.solver.eps_hvi = num();
        else if (key == "max_outer")
            cfg.solver.max_outer = integer();
        else if (key == "max_newton")
            cfg.solver.max_newton = integer();
        else if (key == "inner_ratio")
            cfg.solver.inner_ratio = num();
        else if (key == "method") {
            const std::string& v = parser.string(key, e);
            if (v == "uzawa_newton")
                cfg.solver.method = SolverMethod::uzawa_newton;
            else if (v == "coupled_newton")
                cfg.solver.method = SolverMethod::coupled_newton;
            else
                parser.fail(e.line, "method must be \"uzawa_newton\" or \"coupled_newton\"");
        } else if (key == "tau")
            cfg.opt.tau = num();
        else if (key == "delta_fd")
            cfg.opt.delta_fd = num();
        else if (key == "eps_opt")
            cfg.opt.eps_opt = num();
        else if (key == "max_iter")
            cfg.opt.max_iter = integer();
        else if (key == "state_tol")
            cfg.opt.state_tol = num();
        else if (key == "chord_max")
            cfg.opt.chord_max = integer();
        else if (key == "fd_subset")
            cfg.opt.fd_subset = integer();
        else if (key == "exact_regularization")
            cfg.opt.exact_regularization = parser.boolean(key, e);
        else if (key == "c_k")
            cfg.constants.c_k = num();
        else if (key == "c_g")
            cfg.constants.c_g = num();
        else if (key == "c_s")
            cfg.constants.c_s = num();
        else if (key == "c_b")
            cfg.constants.c_b = num();
        else if (key == "out_dir")
            cfg.out_dir = parser.string(key, e);
        else if (key == "seed") {
            const long long s = parser.integer(key, e);
            if (s < 0)
                parser.fail(e.line, "seed must be nonnegative");
            cfg.seed = static_cast<unsigned long long>(s);
        } else
            parser.fail(e.line, "unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigurationError("cannot open config file '" + path + "'");
    return parse_config(is, path);
}

} // namespace cbfed
