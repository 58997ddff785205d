#include "mdflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace mdflow {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

const std::set<std::string> kSections = {"domain", "flow",   "advection", "forcing",
                                         "initial", "time",  "solver",    "output"};

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

// Raw entries plus typed accessors that record defaults and consumption.
class Document {
public:
    explicit Document(const std::string& text) {
        std::istringstream is(text);
        std::string line, section;
        int number = 0;
        while (std::getline(is, line)) {
            ++number;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail_line(number, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (!kSections.count(section)) fail_line(number, "unknown section [" + section + "]");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail_line(number, "expected 'key = value'");
            if (section.empty()) fail_line(number, "key outside of any [section]");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail_line(number, "empty key");
            if (value.empty()) fail(section + "." + key, "empty value");
            const std::string full = section + "." + key;
            if (entries_.count(full)) fail_line(number, "duplicate key " + full);
            entries_[full] = {value, number, false};
        }
    }

    [[noreturn]] static void fail(const std::string& key, const std::string& what) {
        throw InvalidArgument(key + ": " + what);
    }
    [[noreturn]] static void fail_line(int line, const std::string& what) {
        throw InvalidArgument("config line " + std::to_string(line) + ": " + what);
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::optional<std::string> raw(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        it->second.used = true;
        return it->second.value;
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (auto v = raw(key)) return record(key, *v, false);
        return record(key, fallback, true);
    }

    std::string required_text(const std::string& key) {
        if (auto v = raw(key)) return record(key, *v, false);
        fail(key, "missing required key");
    }

    double number(const std::string& key, std::optional<double> fallback) {
        auto v = raw(key);
        if (!v) {
            if (!fallback) fail(key, "missing required key");
            record(key, format_value(*fallback), true);
            return *fallback;
        }
        record(key, *v, false);
        return parse_number(key, *v);
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback,
                                std::size_t expected = 0) {
        auto v = raw(key);
        if (!v) {
            if (!fallback) fail(key, "missing required key");
            std::string joined;
            for (double d : *fallback) joined += (joined.empty() ? "" : " ") + format_value(d);
            record(key, joined, true);
            return *fallback;
        }
        record(key, *v, false);
        std::vector<double> out;
        for (const auto& tok : split_ws(*v)) out.push_back(parse_number(key, tok));
        if (expected && out.size() != expected) {
            fail(key, "expected " + std::to_string(expected) + " numbers, got " + std::to_string(out.size()));
        }
        return out;
    }

    int integer(const std::string& key, int fallback) {
        auto v = raw(key);
        if (!v) {
            record(key, std::to_string(fallback), true);
            return fallback;
        }
        record(key, *v, false);
        char* end = nullptr;
        const long n = std::strtol(v->c_str(), &end, 10);
        if (end == v->c_str() || *end != '\0') fail(key, "expected an integer, got '" + *v + "'");
        return static_cast<int>(n);
    }

    bool boolean(const std::string& key, bool fallback) {
        auto v = raw(key);
        if (!v) {
            record(key, fallback ? "true" : "false", true);
            return fallback;
        }
        record(key, *v, false);
        if (*v == "true") return true;
        if (*v == "false") return false;
        fail(key, "expected true or false, got '" + *v + "'");
    }

    /// Rejects a key that is present although it does not apply.
    void forbid(const std::string& key, const std::string& why) {
        if (has(key)) fail(key, why);
    }

    void reject_unused() const {
        for (const auto& [key, e] : entries_) {
            if (!e.used) fail_line(e.line, "unknown key " + key);
        }
    }

    std::map<std::string, std::string> effective;
    std::vector<std::string> defaulted;

private:
    static double parse_number(const std::string& key, const std::string& s) {
        char* end = nullptr;
        const double d = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') fail(key, "expected a number, got '" + s + "'");
        if (!std::isfinite(d)) fail(key, "must be finite");
        return d;
    }

    std::string record(const std::string& key, const std::string& value, bool is_default) {
        effective[key] = value;
        if (is_default) defaulted.push_back(key);
        return value;
    }

    std::map<std::string, Entry> entries_;
};

void require(bool ok, const std::string& key, const std::string& what, double got) {
    if (!ok) Document::fail(key, what + " (got " + format_value(got) + ")");
}

BumpStream read_bump(Document& doc, const std::string& section, const BumpStream& fallback) {
    BumpStream b;
    const auto c = doc.numbers(section + ".bump_center",
                               std::vector<double>{fallback.center.x(), fallback.center.y()}, 2);
    b.center = Vec2(c[0], c[1]);
    b.radius = doc.number(section + ".bump_radius", fallback.radius);
    b.amplitude = doc.number(section + ".bump_amplitude", fallback.amplitude);
    b.exponent = doc.integer(section + ".bump_exponent", fallback.exponent);
    require(b.radius > 0.0, section + ".bump_radius", "must be > 0", b.radius);
    require(b.exponent >= 2, section + ".bump_exponent", "must be >= 2", b.exponent);
    return b;
}

struct FieldSpec {
    VelocityField field;
    std::vector<std::string> kinds;
};

FieldSpec read_field(Document& doc, const std::string& section) {
    const std::string kind_key = section + ".kind";
    const std::string kind_text = doc.required_text(kind_key);
    FieldParameters p;
    p.omega = doc.number(section + ".omega", 1.0);
    const auto s = doc.numbers(section + ".shear", std::vector<double>{0.0, 1.0, 0.0}, 3);
    p.shear << s[0], s[1], s[2], -s[0];
    p.bump = read_bump(doc, section, BumpStream{Vec2::Zero(), 0.8, 1.0, 4});
    p.modulation_amplitude = doc.number(section + ".modulation_amplitude", 0.0);
    p.modulation_frequency = doc.number(section + ".modulation_frequency", 0.0);

    FieldSpec spec;
    std::vector<VelocityField> parts;
    std::string rest = kind_text;
    std::replace(rest.begin(), rest.end(), '+', ' ');
    for (const auto& k : split_ws(rest)) {
        spec.kinds.push_back(k);
        if (k == "zero") parts.push_back(make_field(FieldKind::Zero, p));
        else if (k == "rotation") parts.push_back(make_field(FieldKind::RigidRotation, p));
        else if (k == "shear") parts.push_back(make_field(FieldKind::Shear, p));
        else if (k == "bump") parts.push_back(make_field(FieldKind::StreamBump, p));
        else Document::fail(kind_key, "unknown field kind '" + k + "' (zero, rotation, shear, bump, joined by +)");
    }
    if (parts.empty()) Document::fail(kind_key, "no field kind given");
    spec.field = parts.size() == 1 ? parts.front() : make_composite(std::move(parts));
    return spec;
}

}  // namespace

StudyConfig parse_config_text(const std::string& text) {
    Document doc(text);
    StudyConfig out;
    RunConfig& run = out.run;

    // domain
    run.holdall_radius = doc.number("domain.holdall_radius", kDefaultHoldAllRadius);
    require(run.holdall_radius > 1.0, "domain.holdall_radius", "must be > 1 (the unit disk must fit)",
            run.holdall_radius);
    run.h = doc.number("domain.h", std::nullopt);
    require(run.h > 0.0 && run.h < 1.0, "domain.h", "must lie in (0, 1)", run.h);

    // flow
    const FieldSpec flow = read_field(doc, "flow");
    run.flow = std::make_shared<const VelocityField>(flow.field);

    // advection
    const std::string mode = doc.text("advection.mode", "equal-w");
    if (mode == "equal-w") {
        for (const char* k : {"kind", "omega", "shear", "bump_center", "bump_radius", "bump_amplitude",
                              "bump_exponent", "modulation_amplitude", "modulation_frequency"}) {
            doc.forbid(std::string("advection.") + k, "only allowed with advection.mode = field");
        }
        run.advection = run.flow;
    } else if (mode == "field") {
        run.advection = std::make_shared<const VelocityField>(read_field(doc, "advection").field);
    } else {
        Document::fail("advection.mode", "expected equal-w or field, got '" + mode + "'");
    }

    // forcing and initial data
    const std::string forcing = doc.text("forcing.type", "zero");
    const bool manufactured = forcing.rfind("manufactured:", 0) == 0;
    const std::string initial = doc.text("initial.type", manufactured ? "exact" : "zero");
    const BumpStream bump = read_bump(doc, "initial", default_case_bump());
    if (manufactured) {
        const std::string name = forcing.substr(std::string("manufactured:").size());
        if (name != "rotation") {
            Document::fail("forcing.type", "unknown manufactured case '" + name + "' (rotation)");
        }
        if (flow.kinds != std::vector<std::string>{"rotation"}
            || run.flow->parameters().modulation_amplitude != 0.0) {
            Document::fail("flow.kind", "manufactured:rotation needs an unmodulated kind = rotation");
        }
        if (initial != "exact") {
            Document::fail("initial.type", "manufactured forcing starts from the exact solution (exact)");
        }
        const auto advection = run.advection_equals_flow() ? nullptr : run.advection;
        ManufacturedCase mc = make_rotation_case(run.flow->parameters().omega, bump, advection,
                                                 run.holdall_radius);
        // The case owns an equivalent rotation; use it so V = w stays one object.
        run.flow = mc.flow;
        run.advection = mc.advection;
        run.forcing = mc.forcing;
        run.forcing_name = forcing;
        run.initial = mc.exact(0.0);
        out.manufactured = std::move(mc);
    } else if (forcing == "zero") {
        run.forcing_name = "zero";
        if (initial == "zero") {
            run.initial = {};
        } else if (initial == "bump") {
            run.initial = bump_velocity(bump);
        } else {
            Document::fail("initial.type", "expected zero or bump, got '" + initial + "'");
        }
    } else {
        Document::fail("forcing.type", "expected zero or manufactured:rotation, got '" + forcing + "'");
    }

    // time
    if (doc.has("time.tau") && doc.has("time.taus")) {
        Document::fail("time.taus", "give either time.tau or time.taus, not both");
    }
    if (doc.has("time.taus")) {
        out.taus = doc.numbers("time.taus", std::nullopt);
        if (out.taus.empty()) Document::fail("time.taus", "empty list");
        for (double t : out.taus) require(t > 0.0, "time.taus", "every step must be > 0", t);
    } else {
        const double tau = doc.number("time.tau", std::nullopt);
        require(tau > 0.0, "time.tau", "must be > 0", tau);
        out.taus = {tau};
    }
    std::sort(out.taus.begin(), out.taus.end(), std::greater<>());
    run.tau = out.taus.front();
    run.T = doc.number("time.T", std::nullopt);
    require(run.T > 0.0, "time.T", "must be > 0", run.T);
    run.substeps = doc.integer("time.substeps", 10);
    require(run.substeps >= 1, "time.substeps", "must be >= 1", run.substeps);

    // solver
    run.tolerance = doc.number("solver.tolerance", 1e-10);
    require(run.tolerance > 0.0 && run.tolerance <= 1e-4, "solver.tolerance", "must lie in (0, 1e-4]",
            run.tolerance);
    run.max_iterations = doc.integer("solver.max_iterations", 20);
    require(run.max_iterations >= 1, "solver.max_iterations", "must be >= 1", run.max_iterations);
    run.skew_convection = doc.boolean("solver.skew_convection", false);
    run.reaction = doc.number("solver.reaction", 0.0);
    require(run.reaction >= 0.0, "solver.reaction", "must be >= 0", run.reaction);
    if (out.manufactured && run.reaction != 0.0) {
        Document::fail("solver.reaction", "manufactured forcing assumes reaction = 0");
    }

    // output
    run.output.directory = doc.text("output.directory", "output");
    run.output.csv = doc.boolean("output.csv", true);
    run.output.vtk_stride = doc.integer("output.vtk_stride", 0);
    require(run.output.vtk_stride >= 0, "output.vtk_stride", "must be >= 0", run.output.vtk_stride);
    run.output.timing = doc.boolean("output.timing", true);

    doc.reject_unused();
    run.validate();
    out.effective = std::move(doc.effective);
    out.defaulted = std::move(doc.defaulted);
    return out;
}

StudyConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string describe(const StudyConfig& config) {
    std::ostringstream os;
    for (const auto& [key, value] : config.effective) {
        const bool is_default =
            std::find(config.defaulted.begin(), config.defaulted.end(), key) != config.defaulted.end();
        os << key << " = " << value << (is_default ? "  (default)" : "") << '\n';
    }
    return os.str();
}

}  // namespace mdflow
