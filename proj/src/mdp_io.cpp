#include "eau/mdp_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "eau/error.hpp"

namespace eau {

std::string format_real(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{})
        throw Error("cannot format real");
    return std::string(buf, end);
}

bool parse_real(std::string_view token, double& value) {
    if (token.empty())
        return false;
    const char* first = token.data();
    if (*first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, token.data() + token.size(), value);
    return ec == std::errc{} && ptr == token.data() + token.size();
}

namespace {

template <class Int>
bool parse_int(std::string_view token, Int& value) {
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    return ec == std::errc{} && ptr == token.data() + token.size() && !token.empty();
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r')
            ++j;
        if (j > i)
            out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

/// Iterates over lines with comments stripped, tracking 1-based numbers.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    bool next(std::vector<std::string_view>& tokens) {
        while (pos_ <= text_.size()) {
            if (pos_ == text_.size()) {
                pos_ = text_.size() + 1;
                return false;
            }
            std::size_t end = text_.find('\n', pos_);
            if (end == std::string_view::npos)
                end = text_.size();
            std::string_view line = text_.substr(pos_, end - pos_);
            pos_ = end + 1;
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string_view::npos)
                line = line.substr(0, hash);
            tokens = split_ws(line);
            if (!tokens.empty())
                return true;
        }
        return false;
    }

    std::size_t line() const noexcept { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
};

[[noreturn]] void fail(const std::string& msg, std::size_t line) {
    throw ParseError("line " + std::to_string(line) + ": " + msg, line);
}

}  // namespace

Mdp parse_mdp(std::string_view text) {
    LineReader reader(text);
    std::vector<std::string_view> tok;

    if (!reader.next(tok) || tok.size() != 1 || tok[0] != "mdp")
        fail("expected 'mdp' header", reader.line());
    if (!reader.next(tok) || tok.size() != 2 || tok[0] != "states")
        fail("expected 'states <N>'", reader.line());
    std::size_t n = 0;
    if (!parse_int(tok[1], n) || n == 0)
        fail("invalid state count", reader.line());

    MdpBuilder builder(n);
    std::map<std::pair<StateId, ActionId>, std::size_t> first_line;

    auto state_arg = [&](std::string_view t) {
        StateId s = 0;
        if (!parse_int(t, s))
            fail("invalid state id '" + std::string(t) + "'", reader.line());
        if (s >= n)
            fail("state " + std::to_string(s) + " out of range", reader.line());
        return s;
    };
    auto action_arg = [&](std::string_view t) {
        ActionId a = 0;
        if (!parse_int(t, a))
            fail("invalid action id '" + std::string(t) + "'", reader.line());
        return a;
    };
    auto real_arg = [&](std::string_view t) {
        double v = 0;
        if (!parse_real(t, v))
            fail("invalid number '" + std::string(t) + "'", reader.line());
        return v;
    };

    while (reader.next(tok)) {
        const std::string_view kw = tok[0];
        if (kw == "initial" && tok.size() == 2) {
            builder.set_initial_state(state_arg(tok[1]));
        } else if (kw == "discount" && tok.size() == 2) {
            builder.set_discount(real_arg(tok[1]));
        } else if (kw == "absorbing" && tok.size() >= 2) {
            for (std::size_t i = 1; i < tok.size(); ++i)
                builder.add_absorbing(state_arg(tok[i]));
        } else if (kw == "label" && tok.size() >= 2) {
            std::string name(tok[1]);
            builder.declare_label(name);
            for (std::size_t i = 2; i < tok.size(); ++i)
                builder.add_label(name, state_arg(tok[i]));
        } else if (kw == "reward" && tok.size() == 4 && tok[1] == "state") {
            builder.set_state_reward(state_arg(tok[2]), real_arg(tok[3]));
        } else if (kw == "reward" && tok.size() == 5 && tok[1] == "sa") {
            builder.set_choice_reward(state_arg(tok[2]), action_arg(tok[3]), real_arg(tok[4]));
        } else if (kw == "transition" && tok.size() == 5) {
            StateId s = state_arg(tok[1]);
            ActionId a = action_arg(tok[2]);
            StateId t = state_arg(tok[3]);
            double p = real_arg(tok[4]);
            first_line.try_emplace({s, a}, reader.line());
            builder.add_transition(s, a, t, p);
        } else {
            fail("unrecognised line '" + std::string(kw) + "'", reader.line());
        }
    }

    Mdp mdp = std::move(builder).build();
    ValidationReport report = validate_mdp(mdp);
    if (!report.empty()) {
        const ValidationIssue& issue = report.front();
        std::size_t line = reader.line();
        if (issue.state && issue.action)
            if (auto it = first_line.find({*issue.state, *issue.action}); it != first_line.end())
                line = it->second;
        fail(issue.to_string(), line);
    }
    return mdp;
}

Mdp load_mdp(const std::filesystem::path& path) {
    return parse_mdp(read_text_file(path));
}

void write_mdp(std::ostream& out, const Mdp& mdp) {
    out << "mdp\n";
    out << "states " << mdp.num_states() << '\n';
    out << "initial " << mdp.initial_state() << '\n';
    out << "discount " << format_real(mdp.discount()) << '\n';
    if (!mdp.absorbing_states().empty()) {
        out << "absorbing";
        for (StateId s : mdp.absorbing_states())
            out << ' ' << s;
        out << '\n';
    }
    for (const auto& [name, states] : mdp.labels()) {
        out << "label " << name;
        for (StateId s : states)
            out << ' ' << s;
        out << '\n';
    }
    for (StateId s = 0; s < mdp.num_states(); ++s)
        if (mdp.state_reward(s) != 0.0 || std::signbit(mdp.state_reward(s)))
            out << "reward state " << s << ' ' << format_real(mdp.state_reward(s)) << '\n';
    if (mdp.has_choice_rewards())
        for (StateId s = 0; s < mdp.num_states(); ++s)
            for (ActionId a = 0; a < mdp.num_actions(s); ++a)
                if (double r = mdp.choice_reward(mdp.choice(s, a)); r != 0.0)
                    out << "reward sa " << s << ' ' << a << ' ' << format_real(r) << '\n';
    std::string line;
    for (StateId s = 0; s < mdp.num_states(); ++s)
        for (ActionId a = 0; a < mdp.num_actions(s); ++a)
            for (const Transition& t : mdp.transitions(s, a)) {
                line = "transition ";
                line += std::to_string(s);
                line += ' ';
                line += std::to_string(a);
                line += ' ';
                line += std::to_string(t.target);
                line += ' ';
                line += format_real(t.probability);
                line += '\n';
                out << line;
            }
}

std::string format_mdp(const Mdp& mdp) {
    std::ostringstream out;
    write_mdp(out, mdp);
    return out.str();
}

void save_mdp(const Mdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    write_mdp(out, mdp);
    if (!out)
        throw Error("write to " + path.string() + " failed");
}

// ---------------------------------------------------------------------------
// Policy CSV

StochasticPolicy parse_policy_csv(std::string_view text, const Mdp& mdp) {
    StochasticPolicy policy(mdp);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        if (!header) {
            if (line != "state,action,probability")
                fail("expected header 'state,action,probability'", line_no);
            header = true;
            continue;
        }
        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            fail("expected three fields", line_no);
        StateId s = 0;
        ActionId a = 0;
        double p = 0;
        if (!parse_int(line.substr(0, c1), s) || !parse_int(line.substr(c1 + 1, c2 - c1 - 1), a) ||
            !parse_real(line.substr(c2 + 1), p))
            fail("malformed row", line_no);
        if (s >= mdp.num_states())
            fail("undefined-policy-state: state " + std::to_string(s) + " out of range", line_no);
        if (a >= mdp.num_actions(s))
            fail("action-not-enabled: state " + std::to_string(s) + " action " + std::to_string(a), line_no);
        policy.row(s)[a] = p;
    }
    if (!header)
        fail("empty policy file", line_no);
    return policy;
}

StochasticPolicy load_policy(const std::filesystem::path& path, const Mdp& mdp) {
    return parse_policy_csv(read_text_file(path), mdp);
}

std::string format_policy_csv(const StochasticPolicy& policy) {
    std::string out = "state,action,probability\n";
    for (StateId s = 0; s < policy.num_states(); ++s) {
        auto row = policy.row(s);
        for (ActionId a = 0; a < row.size(); ++a)
            if (row[a] != 0.0) {
                out += std::to_string(s);
                out += ',';
                out += std::to_string(a);
                out += ',';
                out += format_real(row[a]);
                out += '\n';
            }
    }
    return out;
}

void save_policy(const StochasticPolicy& policy, const std::filesystem::path& path) {
    write_text_file(path, format_policy_csv(policy));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out)
        throw Error("write to " + path.string() + " failed");
}

}  // namespace eau
