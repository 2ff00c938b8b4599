#include "sm/dsl.hpp"

#include "sm/errors.hpp"
#include "sm/rulesynth.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace sm {
namespace {

struct Token {
    enum Kind { Word, Number, LBrace, RBrace, Comma, Arrow, Colon, Newline, End } kind;
    std::string text;
    int line;
    int col;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_blanks();
        if (pos_ >= text_.size()) return make(Token::End, "");
        char c = text_[pos_];
        if (c == '\n') {
            Token t = make(Token::Newline, "\n");
            ++pos_;
            ++line_;
            col_ = 1;
            return t;
        }
        if (c == '{') return single(Token::LBrace);
        if (c == '}') return single(Token::RBrace);
        if (c == ',') return single(Token::Comma);
        if (c == ':') return single(Token::Colon);
        if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
            Token t = make(Token::Arrow, "->");
            pos_ += 2;
            col_ += 2;
            return t;
        }
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            int col = col_;
            if (c == '-' || c == '+') advance();
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '/' ||
                    text_[pos_] == '.'))
                advance();
            Token t = make(Token::Number, text_.substr(start, pos_ - start));
            t.col = col;
            return t;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            int col = col_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                advance();
            Token t = make(Token::Word, text_.substr(start, pos_ - start));
            t.col = col;
            return t;
        }
        throw Error(ErrorKind::SyntaxError, "line " + std::to_string(line_) + ":" +
                                                std::to_string(col_) + ": unexpected character '" +
                                                std::string(1, c) + "'");
    }

  private:
    Token make(Token::Kind k, std::string s) { return Token{k, std::move(s), line_, col_}; }
    Token single(Token::Kind k) {
        Token t = make(k, std::string(1, text_[pos_]));
        advance();
        return t;
    }
    void advance() {
        ++pos_;
        ++col_;
    }
    void skip_blanks() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == '\r' || c == ' ' || c == '\t') {
                advance();
            } else {
                return;
            }
        }
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class Parser {
  public:
    explicit Parser(const std::string& text) : lex_(text) { shift(); }

    SourceDocument parse() {
        SourceDocument doc;
        skip_newlines();
        while (tok_.kind != Token::End) {
            if (tok_.kind == Token::Word && tok_.text == "machine") {
                parse_machine(doc);
            } else if (tok_.kind == Token::Word && tok_.text == "config") {
                parse_config(doc);
            } else {
                fail("expected 'machine' or 'config'");
            }
            skip_newlines();
        }
        validate(doc);
        return doc;
    }

  private:
    [[noreturn]] void fail(const std::string& expected) {
        throw Error(ErrorKind::SyntaxError, "line " + std::to_string(tok_.line) + ":" +
                                                std::to_string(tok_.col) + ": " + expected +
                                                ", got '" + tok_.text + "'");
    }
    void shift() { tok_ = lex_.next(); }
    void skip_newlines() {
        while (tok_.kind == Token::Newline) shift();
    }
    std::string expect_word() {
        if (tok_.kind != Token::Word) fail("expected a name");
        std::string w = tok_.text;
        shift();
        return w;
    }
    void expect(Token::Kind k, const char* what) {
        if (tok_.kind != k) fail(std::string("expected ") + what);
        shift();
    }
    void expect_keyword(const char* kw) {
        if (tok_.kind != Token::Word || tok_.text != kw) fail(std::string("expected '") + kw + "'");
        shift();
    }
    void end_of_line() {
        if (tok_.kind != Token::Newline && tok_.kind != Token::End) fail("expected end of line");
        skip_newlines();
    }
    Rat expect_rational() {
        if (tok_.kind != Token::Number) fail("expected a rational");
        auto r = Rat::parse(tok_.text);
        if (!r) fail("malformed rational");
        shift();
        return *r;
    }
    std::vector<std::string> name_set(bool allow_empty) {
        expect(Token::LBrace, "'{'");
        std::vector<std::string> names;
        if (tok_.kind == Token::RBrace) {
            if (!allow_empty) fail("expected at least one name");
            shift();
            return names;
        }
        names.push_back(expect_word());
        while (tok_.kind == Token::Comma) {
            shift();
            names.push_back(expect_word());
        }
        expect(Token::RBrace, "'}'");
        return names;
    }

    void parse_machine(SourceDocument& doc) {
        shift();  // machine
        SignalMachine m;
        m.name = expect_word();
        end_of_line();
        while (tok_.kind == Token::Word && (tok_.text == "signal" || tok_.text == "rule")) {
            if (tok_.text == "signal") {
                shift();
                MetaSignal s;
                s.name = expect_word();
                expect_keyword("speed");
                s.speed = expect_rational();
                m.signals.push_back(std::move(s));
            } else {
                shift();
                CollisionRule r;
                std::vector<std::string> in = name_set(false);
                if (in.size() < 2)
                    throw Error(ErrorKind::ValidationError,
                                "rule in machine '" + m.name +
                                    "' needs at least two incoming meta-signals");
                expect(Token::Arrow, "'->'");
                std::vector<std::string> out = name_set(true);
                r.incoming = CollisionRule::canon(std::move(in));
                r.outgoing = CollisionRule::canon(std::move(out));
                m.rules.push_back(std::move(r));
            }
            end_of_line();
        }
        m.rebuild_index();
        m.validate();
        doc.machines.push_back(std::move(m));
    }

    void parse_config(SourceDocument& doc) {
        shift();  // config
        SourceDocument::NamedConfig c;
        c.name = expect_word();
        expect_keyword("for");
        c.machine = expect_word();
        end_of_line();
        while (tok_.kind == Token::Word && tok_.text == "at") {
            shift();
            Rat pos = expect_rational();
            expect(Token::Colon, "':'");
            if (tok_.kind == Token::Word && tok_.text == "collision") {
                shift();
                CollisionRule r;
                r.incoming = CollisionRule::canon(name_set(false));
                expect(Token::Arrow, "'->'");
                r.outgoing = CollisionRule::canon(name_set(true));
                c.config.put(pos, ExtendedValue::collision(std::move(r)));
            } else {
                c.config.put(pos, ExtendedValue::signal(expect_word()));
            }
            end_of_line();
        }
        doc.configs.push_back(std::move(c));
    }

    void validate(SourceDocument& doc) {
        std::set<std::string> machine_names;
        for (const auto& m : doc.machines)
            if (!machine_names.insert(m.name).second)
                throw Error(ErrorKind::ValidationError, "duplicate machine '" + m.name + "'");
        std::set<std::string> config_names;
        for (const auto& c : doc.configs) {
            if (!config_names.insert(c.name).second)
                throw Error(ErrorKind::ValidationError, "duplicate config '" + c.name + "'");
            const SignalMachine* m = doc.find_machine(c.machine);
            if (!m)
                throw Error(ErrorKind::ValidationError,
                            "config '" + c.name + "' references unknown machine '" + c.machine +
                                "'");
            c.config.validate_for(*m);
            // A collision entry naming a declared incoming set must agree with
            // the declared outgoing; otherwise it must at least resolve.
            for (const auto& e : c.config.entries()) {
                if (!e.value.is_collision()) continue;
                if (const CollisionRule* declared = m->find_rule(e.value.rule().incoming)) {
                    if (declared->outgoing != e.value.rule().outgoing)
                        throw Error(ErrorKind::ValidationError,
                                    "collision at " + e.pos.str() + " in config '" + c.name +
                                        "' contradicts the declared rule for {" +
                                        SignalMachine::join(e.value.rule().incoming) + "}");
                }
            }
        }
    }

    Lexer lex_;
    Token tok_{Token::End, "", 0, 0};
};

}  // namespace

SourceDocument parse_document(const std::string& text) { return Parser(text).parse(); }

std::string serialize_document(const SourceDocument& doc) {
    std::ostringstream os;
    std::vector<const SignalMachine*> machines;
    for (const auto& m : doc.machines) machines.push_back(&m);
    std::sort(machines.begin(), machines.end(),
              [](const SignalMachine* a, const SignalMachine* b) { return a->name < b->name; });

    bool first = true;
    for (const SignalMachine* m : machines) {
        if (!first) os << "\n";
        first = false;
        os << "machine " << m->name << "\n";
        std::vector<const MetaSignal*> sigs;
        for (const auto& s : m->signals) sigs.push_back(&s);
        std::sort(sigs.begin(), sigs.end(),
                  [](const MetaSignal* a, const MetaSignal* b) { return a->name < b->name; });
        for (const MetaSignal* s : sigs)
            os << "  signal " << s->name << " speed " << s->speed.str() << "\n";
        std::vector<const CollisionRule*> rules;
        for (const auto& r : m->rules) rules.push_back(&r);
        std::sort(rules.begin(), rules.end(), [](const CollisionRule* a, const CollisionRule* b) {
            return a->incoming < b->incoming;
        });
        for (const CollisionRule* r : rules) {
            os << "  rule {" << SignalMachine::join(r->incoming) << "} -> {"
               << SignalMachine::join(r->outgoing) << "}\n";
        }
    }

    std::vector<const SourceDocument::NamedConfig*> configs;
    for (const auto& c : doc.configs) configs.push_back(&c);
    std::sort(configs.begin(), configs.end(),
              [](const SourceDocument::NamedConfig* a, const SourceDocument::NamedConfig* b) {
                  return a->name < b->name;
              });
    for (const auto* c : configs) {
        if (!first) os << "\n";
        first = false;
        os << "config " << c->name << " for " << c->machine << "\n";
        for (const auto& e : c->config.entries()) {
            os << "  at " << e.pos.str() << ": ";
            if (e.value.is_signal()) {
                os << e.value.signal_name();
            } else {
                os << "collision {" << SignalMachine::join(e.value.rule().incoming) << "} -> {"
                   << SignalMachine::join(e.value.rule().outgoing) << "}";
            }
            os << "\n";
        }
    }
    return os.str();
}

}  // namespace sm
