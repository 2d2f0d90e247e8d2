#include "spinspec/parser.hpp"

#include <cctype>
#include <optional>

namespace spinspec {

namespace {

enum class Tok {
    End,
    Ident,
    Number,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    Plus,
    Minus,
    Star,
    Slash,
    Pipe,
    Hash,
    Assign,   // =
    EqEq,     // ==
    NotEq,    // !=
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Arrow,    // ->
    Diamond,  // <>
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourceLoc loc;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }
    Token next() {
        Token t = tok_;
        advance();
        return t;
    }
    std::map<std::string, std::string> directives;

  private:
    void advance() {
        skip_space();
        tok_.loc = {line_, col_};
        if (pos_ >= text_.size()) {
            tok_ = {Tok::End, "", tok_.loc};
            return;
        }
        char c = text_[pos_];
        if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < text_.size() &&
                   (isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                    text_[pos_] == '\''))
                bump();
            tok_.kind = Tok::Ident;
            tok_.text = text_.substr(start, pos_ - start);
            return;
        }
        if (isdigit(static_cast<unsigned char>(c))) {
            size_t start = pos_;
            while (pos_ < text_.size() && isdigit(static_cast<unsigned char>(text_[pos_])))
                bump();
            tok_.kind = Tok::Number;
            tok_.text = text_.substr(start, pos_ - start);
            return;
        }
        auto two = [&](char a, char b) {
            return c == a && pos_ + 1 < text_.size() && text_[pos_ + 1] == b;
        };
        if (two('=', '=')) return emit(Tok::EqEq, 2);
        if (two('!', '=')) return emit(Tok::NotEq, 2);
        if (two('<', '=')) return emit(Tok::Le, 2);
        if (two('>', '=')) return emit(Tok::Ge, 2);
        if (two('&', '&')) return emit(Tok::AndAnd, 2);
        if (two('|', '|')) return emit(Tok::OrOr, 2);
        if (two('-', '>')) return emit(Tok::Arrow, 2);
        if (two('<', '>')) return emit(Tok::Diamond, 2);
        switch (c) {
            case '(': return emit(Tok::LParen, 1);
            case ')': return emit(Tok::RParen, 1);
            case '[': return emit(Tok::LBracket, 1);
            case ']': return emit(Tok::RBracket, 1);
            case '{': return emit(Tok::LBrace, 1);
            case '}': return emit(Tok::RBrace, 1);
            case ',': return emit(Tok::Comma, 1);
            case ';': return emit(Tok::Semi, 1);
            case ':': return emit(Tok::Colon, 1);
            case '.': return emit(Tok::Dot, 1);
            case '+': return emit(Tok::Plus, 1);
            case '-': return emit(Tok::Minus, 1);
            case '*': return emit(Tok::Star, 1);
            case '/': return emit(Tok::Slash, 1);
            case '|': return emit(Tok::Pipe, 1);
            case '#': return emit(Tok::Hash, 1);
            case '=': return emit(Tok::Assign, 1);
            case '<': return emit(Tok::Lt, 1);
            case '>': return emit(Tok::Gt, 1);
            case '!': return emit(Tok::Bang, 1);
        }
        throw Error(ErrorKind::Syntax, std::string("unexpected character `") + c + "`",
                    tok_.loc);
    }

    void emit(Tok kind, int len) {
        tok_.kind = kind;
        tok_.text = text_.substr(pos_, static_cast<size_t>(len));
        for (int i = 0; i < len; ++i) bump();
    }

    void skip_space() {
        for (;;) {
            while (pos_ < text_.size() &&
                   isspace(static_cast<unsigned char>(text_[pos_])))
                bump();
            if (pos_ < text_.size() && text_[pos_] == '%') {
                size_t start = pos_;
                while (pos_ < text_.size() && text_[pos_] != '\n') bump();
                std::string comment = text_.substr(start, pos_ - start);
                if (comment.rfind("%!", 0) == 0) {
                    auto colon = comment.find(':');
                    if (colon != std::string::npos) {
                        std::string key = comment.substr(2, colon - 2);
                        std::string val = comment.substr(colon + 1);
                        auto trim = [](std::string& s) {
                            while (!s.empty() && isspace(static_cast<unsigned char>(s.front())))
                                s.erase(s.begin());
                            while (!s.empty() && isspace(static_cast<unsigned char>(s.back())))
                                s.pop_back();
                        };
                        trim(key);
                        trim(val);
                        directives[key] = val;
                    }
                }
                continue;
            }
            break;
        }
    }

    void bump() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token tok_;
};

bool is_keyword(const std::string& s) {
    static const char* kw[] = {"sort", "struct", "map",  "var",  "eqn",  "act",
                               "glob", "proc",   "init", "sum",  "dist", "delta",
                               "if",   "mod",    "in",   "true", "false", "mu",
                               "nu",   "sup",    "inf",  "List"};
    for (const char* k : kw)
        if (s == k) return true;
    return false;
}

// Either side of the mixed formula/data grammar; data stays Expr as long as
// possible so maximal data subtrees land in single Data nodes.
struct FNode {
    ExprPtr expr;
    FormulaPtr form;
    bool is_expr() const { return expr != nullptr; }
};

class Parser {
  public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ModelPtr parse_model_file(const std::string& name);
    FormulaSpecPtr parse_formula_file(const std::string& name);
    ExprPtr parse_expr_only();

  private:
    [[noreturn]] void fail(const std::string& expected) {
        const Token& t = lex_.peek();
        std::string got = t.kind == Tok::End ? "end of input" : "`" + t.text + "`";
        throw Error(ErrorKind::Syntax, "expected " + expected + ", got " + got, t.loc);
    }
    bool at(Tok k) const { return lex_.peek().kind == k; }
    bool at_word(const char* w) const {
        return lex_.peek().kind == Tok::Ident && lex_.peek().text == w;
    }
    Token expect(Tok k, const std::string& what) {
        if (!at(k)) fail(what);
        return lex_.next();
    }
    void expect_word(const char* w) {
        if (!at_word(w)) fail(std::string("`") + w + "`");
        lex_.next();
    }
    bool accept(Tok k) {
        if (at(k)) {
            lex_.next();
            return true;
        }
        return false;
    }
    bool accept_word(const char* w) {
        if (at_word(w)) {
            lex_.next();
            return true;
        }
        return false;
    }
    std::string expect_name(const std::string& what) {
        if (!at(Tok::Ident) || is_keyword(lex_.peek().text)) fail(what);
        return lex_.next().text;
    }

    std::string parse_sort_text() {
        if (accept_word("List")) {
            expect(Tok::LParen, "`(`");
            std::string inner = parse_sort_text();
            expect(Tok::RParen, "`)`");
            return "List(" + inner + ")";
        }
        if (!at(Tok::Ident)) fail("a sort name");
        return lex_.next().text;
    }

    std::vector<std::string> parse_name_list() {
        std::vector<std::string> names;
        names.push_back(expect_name("a name"));
        while (accept(Tok::Comma)) names.push_back(expect_name("a name"));
        return names;
    }

    // --- expressions (data language) ---
    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (at(Tok::OrOr)) {
            SourceLoc loc = lex_.next().loc;
            e = Expr::make(ExprKind::Or, {e, parse_and()}, loc);
        }
        return e;
    }
    ExprPtr parse_and() {
        ExprPtr e = parse_cmp();
        while (at(Tok::AndAnd)) {
            SourceLoc loc = lex_.next().loc;
            e = Expr::make(ExprKind::And, {e, parse_cmp()}, loc);
        }
        return e;
    }
    ExprPtr parse_cmp() {
        ExprPtr e = parse_add();
        for (;;) {
            ExprKind k;
            if (at(Tok::EqEq)) k = ExprKind::Eq;
            else if (at(Tok::NotEq)) k = ExprKind::Ne;
            else if (at(Tok::Lt)) k = ExprKind::Lt;
            else if (at(Tok::Le)) k = ExprKind::Le;
            else if (at(Tok::Gt)) k = ExprKind::Gt;
            else if (at(Tok::Ge)) k = ExprKind::Ge;
            else if (at_word("in")) {
                SourceLoc loc = lex_.next().loc;
                expect(Tok::LBrace, "`{`");
                std::vector<ExprPtr> args{e};
                args.push_back(parse_expr());
                while (accept(Tok::Comma)) args.push_back(parse_expr());
                expect(Tok::RBrace, "`}`");
                e = Expr::make(ExprKind::InSet, std::move(args), loc);
                continue;
            } else
                return e;
            SourceLoc loc = lex_.next().loc;
            e = Expr::make(k, {e, parse_add()}, loc);
        }
    }
    ExprPtr parse_add() {
        ExprPtr e = parse_mul();
        for (;;) {
            if (at(Tok::Plus)) {
                SourceLoc loc = lex_.next().loc;
                e = Expr::make(ExprKind::Add, {e, parse_mul()}, loc);
            } else if (at(Tok::Minus)) {
                SourceLoc loc = lex_.next().loc;
                e = Expr::make(ExprKind::Sub, {e, parse_mul()}, loc);
            } else
                return e;
        }
    }
    ExprPtr parse_mul() {
        ExprPtr e = parse_unary();
        for (;;) {
            if (at(Tok::Star)) {
                SourceLoc loc = lex_.next().loc;
                e = Expr::make(ExprKind::Mul, {e, parse_unary()}, loc);
            } else if (at(Tok::Slash)) {
                SourceLoc loc = lex_.next().loc;
                e = Expr::make(ExprKind::Div, {e, parse_unary()}, loc);
            } else if (at_word("mod")) {
                SourceLoc loc = lex_.next().loc;
                e = Expr::make(ExprKind::Mod, {e, parse_unary()}, loc);
            } else
                return e;
        }
    }
    ExprPtr parse_unary() {
        if (at(Tok::Minus)) {
            SourceLoc loc = lex_.next().loc;
            return Expr::make(ExprKind::Neg, {parse_unary()}, loc);
        }
        if (at(Tok::Bang)) {
            SourceLoc loc = lex_.next().loc;
            return Expr::make(ExprKind::Not, {parse_unary()}, loc);
        }
        return parse_postfix();
    }
    ExprPtr parse_postfix() {
        ExprPtr e = parse_primary();
        while (at(Tok::Dot)) {
            SourceLoc loc = lex_.next().loc;
            ExprPtr idx;
            if (at(Tok::Number)) {
                idx = Expr::lit_expr(Value(Int(lex_.peek().text)), lex_.peek().loc);
                lex_.next();
            } else if (at(Tok::LParen)) {
                lex_.next();
                idx = parse_expr();
                expect(Tok::RParen, "`)`");
            } else if (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
                idx = Expr::var(intern(lex_.next().text), loc);
            } else {
                fail("a list index");
            }
            e = Expr::make(ExprKind::Index, {e, idx}, loc);
        }
        return e;
    }
    ExprPtr parse_primary() {
        const Token& t = lex_.peek();
        switch (t.kind) {
            case Tok::Number: {
                ExprPtr e = Expr::lit_expr(Value(Int(t.text)), t.loc);
                lex_.next();
                return e;
            }
            case Tok::LParen: {
                lex_.next();
                ExprPtr e = parse_expr();
                expect(Tok::RParen, "`)`");
                return e;
            }
            case Tok::LBracket: {
                SourceLoc loc = lex_.next().loc;
                std::vector<ExprPtr> items;
                if (!at(Tok::RBracket)) {
                    items.push_back(parse_expr());
                    while (accept(Tok::Comma)) items.push_back(parse_expr());
                }
                expect(Tok::RBracket, "`]`");
                return Expr::make(ExprKind::ListLit, std::move(items), loc);
            }
            case Tok::Ident: {
                if (t.text == "true" || t.text == "false") {
                    ExprPtr e = Expr::lit_expr(Value(t.text == "true"), t.loc);
                    lex_.next();
                    return e;
                }
                if (t.text == "if") {
                    SourceLoc loc = lex_.next().loc;
                    expect(Tok::LParen, "`(`");
                    ExprPtr c = parse_expr();
                    expect(Tok::Comma, "`,`");
                    ExprPtr a = parse_expr();
                    expect(Tok::Comma, "`,`");
                    ExprPtr b = parse_expr();
                    expect(Tok::RParen, "`)`");
                    return Expr::make(ExprKind::If, {c, a, b}, loc);
                }
                if (is_keyword(t.text)) fail("an expression");
                SourceLoc loc = t.loc;
                std::string name = lex_.next().text;
                if (at(Tok::LParen)) {
                    lex_.next();
                    std::vector<ExprPtr> args;
                    if (!at(Tok::RParen)) {
                        args.push_back(parse_expr());
                        while (accept(Tok::Comma)) args.push_back(parse_expr());
                    }
                    expect(Tok::RParen, "`)`");
                    return Expr::call(intern(name), std::move(args), loc);
                }
                return Expr::var(intern(name), loc);
            }
            default: fail("an expression");
        }
    }

    // --- process terms ---
    ProcPtr parse_proc() {  // choice level
        ProcPtr p = parse_proc_cond();
        while (!greedy_ && at(Tok::Plus)) {
            SourceLoc loc = lex_.next().loc;
            ProcPtr q = parse_proc_cond();
            auto n = std::make_shared<ProcessTerm>();
            n->kind = ProcKind::Choice;
            n->loc = loc;
            n->kids = {p, q};
            p = n;
        }
        return p;
    }

    ProcPtr parse_proc_cond() {
        greedy_ = false;
        if (looks_like_condition()) {
            SourceLoc loc = lex_.peek().loc;
            ExprPtr c = parse_expr();
            expect(Tok::Arrow, "`->`");
            ProcPtr then_branch = parse_proc_cond();
            bool had_greedy = greedy_;
            ProcPtr else_branch;
            bool omitted = true;
            if (!had_greedy && at(Tok::Diamond)) {
                lex_.next();
                else_branch = parse_proc_cond();
                omitted = false;
            } else {
                else_branch = ProcessTerm::deadlock(loc);
            }
            auto n = std::make_shared<ProcessTerm>();
            n->kind = ProcKind::Cond;
            n->loc = loc;
            n->cond = c;
            n->kids = {then_branch, else_branch};
            n->else_omitted = omitted;
            return n;
        }
        return parse_proc_seq();
    }

    // Lookahead: find a top-level `->` before any token that cannot occur in
    // a guard expression.
    bool looks_like_condition() {
        Lexer probe = lex_;
        int depth = 0;
        for (int i = 0; i < 500; ++i) {
            Token t = probe.next();
            switch (t.kind) {
                case Tok::Arrow:
                    if (depth == 0) return true;
                    break;
                case Tok::LParen:
                case Tok::LBrace:
                case Tok::LBracket: ++depth; break;
                case Tok::RParen:
                case Tok::RBrace:
                case Tok::RBracket:
                    if (--depth < 0) return false;
                    break;
                case Tok::Dot:
                case Tok::Semi:
                case Tok::Plus:
                case Tok::Diamond:
                    if (depth == 0) return false;
                    break;
                case Tok::End: return false;
                case Tok::Ident:
                    if (depth == 0 &&
                        (t.text == "sum" || t.text == "dist" || t.text == "delta"))
                        return false;
                    break;
                default: break;
            }
        }
        return false;
    }

    ProcPtr parse_proc_seq() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::LParen) {
            lex_.next();
            ProcPtr p = parse_proc();
            expect(Tok::RParen, "`)`");
            greedy_ = false;
            if (at(Tok::Dot))
                throw Error(ErrorKind::Syntax,
                            "general sequential composition `p . q` is not supported; "
                            "only action prefixes may be sequenced",
                            lex_.peek().loc);
            return p;
        }
        if (t.kind != Tok::Ident) fail("a process");
        if (t.text == "delta") {
            SourceLoc loc = lex_.next().loc;
            return ProcessTerm::deadlock(loc);
        }
        if (t.text == "sum" || t.text == "dist") {
            bool is_dist = t.text == "dist";
            SourceLoc loc = lex_.next().loc;
            auto names = parse_name_list();
            expect(Tok::Colon, "`:`");
            std::string sort = parse_sort_text();
            ExprPtr weight;
            if (is_dist) {
                expect(Tok::LBracket, "`[`");
                weight = parse_expr();
                expect(Tok::RBracket, "`]`");
            }
            expect(Tok::Dot, "`.`");
            ProcPtr body = parse_proc();
            auto n = std::make_shared<ProcessTerm>();
            n->kind = is_dist ? ProcKind::Dist : ProcKind::Sum;
            n->loc = loc;
            for (const auto& v : names) n->binders.push_back(intern(v));
            n->binder_sort_name = sort;
            n->weight = weight;
            n->kids = {body};
            greedy_ = true;
            return n;
        }
        if (is_keyword(t.text)) fail("a process");
        SourceLoc loc = t.loc;
        std::string name = lex_.next().text;
        std::vector<ExprPtr> args;
        if (at(Tok::LParen)) {
            lex_.next();
            if (!at(Tok::RParen)) {
                args.push_back(parse_expr());
                while (accept(Tok::Comma)) args.push_back(parse_expr());
            }
            expect(Tok::RParen, "`)`");
        }
        if (accept(Tok::Dot)) {
            ProcPtr rest = parse_proc_cond();
            auto n = std::make_shared<ProcessTerm>();
            n->kind = ProcKind::Prefix;
            n->loc = loc;
            n->name = intern(name);
            n->args = std::move(args);
            n->kids = {rest};
            return n;
        }
        auto n = std::make_shared<ProcessTerm>();
        n->kind = ProcKind::CallProc;
        n->loc = loc;
        n->name = intern(name);
        n->args = std::move(args);
        greedy_ = false;
        return n;
    }

    // --- model sections ---
    void parse_sort_section(ModelSpec& m) {
        while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
            std::string name = expect_name("a sort name");
            expect(Tok::Assign, "`=`");
            ModelSpec::DataItem item;
            item.kind = ModelSpec::DataItem::SortDecl;
            item.sort_name = name;
            if (accept_word("struct")) {
                std::vector<std::string> ctors;
                ctors.push_back(expect_name("a constructor"));
                while (accept(Tok::Pipe)) ctors.push_back(expect_name("a constructor"));
                std::string rhs = "struct ";
                for (size_t i = 0; i < ctors.size(); ++i) {
                    if (i) rhs += " | ";
                    rhs += ctors[i];
                }
                item.sort_rhs = rhs;
                m.sorts.add_enum(name, std::move(ctors));
            } else {
                std::string alias = parse_sort_text();
                item.sort_rhs = alias;
                Sort s = resolve_sort_name(m, alias, lex_.peek().loc);
                m.sorts.add_alias(name, s);
            }
            expect(Tok::Semi, "`;`");
            m.data_items.push_back(std::move(item));
        }
    }

    Sort resolve_sort_name(ModelSpec& m, const std::string& text, SourceLoc loc) {
        if (text.rfind("List(", 0) == 0 && text.back() == ')') {
            Sort elem = resolve_sort_name(m, text.substr(5, text.size() - 6), loc);
            return m.sorts.add_list(elem);
        }
        const Sort* s = m.sorts.lookup(text);
        if (!s) throw Error(ErrorKind::UnknownName, "unknown sort `" + text + "`", loc);
        return *s;
    }

    struct PendingMap {
        std::string name;
        std::vector<std::string> param_sorts;
        std::string result_sort;
        SourceLoc loc;
        bool defined = false;
    };

    void parse_map_section(ModelSpec& m, std::vector<PendingMap>& maps) {
        while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
            auto names = parse_name_list();
            expect(Tok::Colon, "`:`");
            SourceLoc loc = lex_.peek().loc;
            std::vector<std::string> sorts;
            sorts.push_back(parse_sort_text());
            while (accept(Tok::Hash)) sorts.push_back(parse_sort_text());
            std::string result;
            bool has_arrow = accept(Tok::Arrow);
            if (has_arrow) result = parse_sort_text();
            expect(Tok::Semi, "`;`");
            ModelSpec::DataItem item;
            item.kind = ModelSpec::DataItem::MapDecl;
            std::string type_text;
            if (!has_arrow) {
                if (sorts.size() != 1)
                    throw Error(ErrorKind::Syntax, "constant declared with a product sort",
                                loc);
                type_text = sorts[0];
            } else {
                for (size_t i = 0; i < sorts.size(); ++i) {
                    if (i) type_text += " # ";
                    type_text += sorts[i];
                }
                type_text += " -> " + result;
            }
            for (const auto& n : names) {
                PendingMap pm;
                pm.name = n;
                pm.loc = loc;
                if (!has_arrow) {
                    pm.result_sort = sorts[0];
                } else {
                    pm.param_sorts = sorts;
                    pm.result_sort = result;
                }
                maps.push_back(pm);
                item.map_entries.emplace_back(n, type_text);
            }
            m.data_items.push_back(std::move(item));
        }
    }

    void parse_eqn_section(ModelSpec& m, std::vector<PendingMap>& maps,
                           const std::vector<std::pair<NameId, std::string>>& vars) {
        ModelSpec::DataItem item;
        item.kind = ModelSpec::DataItem::EqnGroup;
        item.eqn_vars = vars;
        while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
            SourceLoc loc = lex_.peek().loc;
            std::string name = expect_name("a defined name");
            std::vector<std::string> lhs_args;
            if (accept(Tok::LParen)) {
                lhs_args.push_back(expect_name("a variable"));
                while (accept(Tok::Comma)) lhs_args.push_back(expect_name("a variable"));
                expect(Tok::RParen, "`)`");
            }
            expect(Tok::Assign, "`=`");
            ExprPtr body = parse_expr();
            expect(Tok::Semi, "`;`");

            PendingMap* pm = nullptr;
            for (auto& cand : maps)
                if (cand.name == name) pm = &cand;
            if (!pm)
                throw Error(ErrorKind::Syntax, "`" + name + "` has no map declaration", loc);
            if (pm->defined)
                throw Error(ErrorKind::Syntax,
                            "`" + name + "` already defined; single-definition functions only",
                            loc);
            if (lhs_args.size() != pm->param_sorts.size())
                throw Error(ErrorKind::Syntax,
                            "`" + name + "` declared with " +
                                std::to_string(pm->param_sorts.size()) + " parameter(s)",
                            loc);
            pm->defined = true;

            FunctionDef def;
            def.name = intern(name);
            def.loc = loc;
            def.result = resolve_sort_name(m, pm->result_sort, loc);
            for (size_t i = 0; i < lhs_args.size(); ++i) {
                NameId v = intern(lhs_args[i]);
                std::string declared;
                for (const auto& [vn, vs] : vars)
                    if (vn == v) declared = vs;
                if (declared.empty())
                    throw Error(ErrorKind::Syntax,
                                "equation variable `" + lhs_args[i] + "` not declared in var",
                                loc);
                Sort vsort = resolve_sort_name(m, declared, loc);
                Sort psort = resolve_sort_name(m, pm->param_sorts[i], loc);
                if (vsort != psort)
                    throw Error(ErrorKind::Syntax,
                                "variable `" + lhs_args[i] + "` sort differs from `" + name +
                                    "`'s declared parameter sort",
                                loc);
                def.params.emplace_back(v, vsort);
            }
            def.body = body;
            item.eqn_functions.push_back(m.functions.add(std::move(def)));
        }
        m.data_items.push_back(std::move(item));
    }

    void parse_act_section(ModelSpec& m) {
        while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
            auto names = parse_name_list();
            std::vector<std::string> sorts;
            SourceLoc loc = lex_.peek().loc;
            if (accept(Tok::Colon)) {
                sorts.push_back(parse_sort_text());
                while (accept(Tok::Hash)) sorts.push_back(parse_sort_text());
            }
            expect(Tok::Semi, "`;`");
            for (const auto& n : names)
                m.actions.push_back(ActionDecl{intern(n), sorts, loc, {}});
        }
    }

    void parse_glob_section(ModelSpec& m) {
        while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
            auto names = parse_name_list();
            expect(Tok::Colon, "`:`");
            std::string sort = parse_sort_text();
            SourceLoc loc = lex_.peek().loc;
            expect(Tok::Semi, "`;`");
            for (const auto& n : names) m.globs.push_back(GlobDecl{intern(n), sort, loc, {}});
        }
    }

    void parse_proc_section(ModelSpec& m) {
        while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
            SourceLoc loc = lex_.peek().loc;
            std::string name = expect_name("a process name");
            ProcessDecl decl;
            decl.name = intern(name);
            decl.loc = loc;
            if (accept(Tok::LParen)) {
                for (;;) {
                    auto group = parse_name_list();
                    expect(Tok::Colon, "`:`");
                    std::string sort = parse_sort_text();
                    for (const auto& v : group) decl.params.emplace_back(intern(v), sort);
                    if (!accept(Tok::Comma)) break;
                }
                expect(Tok::RParen, "`)`");
            }
            expect(Tok::Assign, "`=`");
            decl.body = parse_proc();
            expect(Tok::Semi, "`;`");
            m.processes.push_back(std::move(decl));
        }
    }

    // --- formulas ---
    FNode parse_formula_top() { return parse_f_or(); }

    FormulaPtr lift(FNode n) {
        if (n.form) return n.form;
        auto f = std::make_shared<Formula>();
        f->kind = FormKind::Data;
        f->data = n.expr;
        f->loc = n.expr->loc;
        return f;
    }

    FNode parse_f_or() {
        if (FNode q = try_parse_quantifier(); q.form || q.expr) return q;
        FNode lhs = parse_f_and();
        while (!greedy_ && at(Tok::OrOr)) {
            SourceLoc loc = lex_.next().loc;
            FNode rhs = parse_f_and_or_quant();
            auto f = std::make_shared<Formula>();
            f->kind = FormKind::Max;
            f->loc = loc;
            f->kids = {lift(lhs), lift(rhs)};
            lhs = FNode{nullptr, f};
        }
        return lhs;
    }
    FNode parse_f_and_or_quant() {
        if (FNode q = try_parse_quantifier(); q.form || q.expr) return q;
        return parse_f_and();
    }
    FNode parse_f_and() {
        FNode lhs = parse_f_cmp();
        while (!greedy_ && at(Tok::AndAnd)) {
            SourceLoc loc = lex_.next().loc;
            FNode rhs;
            if (FNode q = try_parse_quantifier(); q.form || q.expr) rhs = q;
            else rhs = parse_f_cmp();
            auto f = std::make_shared<Formula>();
            f->kind = FormKind::Min;
            f->loc = loc;
            f->kids = {lift(lhs), lift(rhs)};
            lhs = FNode{nullptr, f};
        }
        return lhs;
    }
    FNode parse_f_cmp() {
        FNode lhs = parse_f_add();
        for (;;) {
            if (greedy_) return lhs;
            ExprKind k;
            if (at(Tok::EqEq)) k = ExprKind::Eq;
            else if (at(Tok::NotEq)) k = ExprKind::Ne;
            else if (at(Tok::Lt)) k = ExprKind::Lt;
            else if (at(Tok::Le)) k = ExprKind::Le;
            else if (at(Tok::Gt)) k = ExprKind::Gt;
            else if (at(Tok::Ge)) k = ExprKind::Ge;
            else if (at_word("in")) {
                SourceLoc loc = lex_.next().loc;
                if (!lhs.is_expr())
                    throw Error(ErrorKind::Syntax, "`in` needs a data operand", loc);
                expect(Tok::LBrace, "`{`");
                std::vector<ExprPtr> args{lhs.expr};
                args.push_back(parse_expr());
                while (accept(Tok::Comma)) args.push_back(parse_expr());
                expect(Tok::RBrace, "`}`");
                lhs = FNode{Expr::make(ExprKind::InSet, std::move(args), loc), nullptr};
                continue;
            } else
                return lhs;
            SourceLoc loc = lex_.next().loc;
            FNode rhs = parse_f_add();
            if (!lhs.is_expr() || !rhs.is_expr())
                throw Error(ErrorKind::Syntax,
                            "comparison operands must be data expressions", loc);
            lhs = FNode{Expr::make(k, {lhs.expr, rhs.expr}, loc), nullptr};
        }
    }
    FNode parse_f_add() {
        FNode lhs = parse_f_mul();
        for (;;) {
            if (greedy_) return lhs;
            bool plus = at(Tok::Plus), minus = at(Tok::Minus);
            if (!plus && !minus) return lhs;
            SourceLoc loc = lex_.next().loc;
            FNode rhs;
            if (FNode q = try_parse_quantifier(); q.form || q.expr) rhs = q;
            else rhs = parse_f_mul();
            if (lhs.is_expr() && rhs.is_expr()) {
                lhs = FNode{Expr::make(plus ? ExprKind::Add : ExprKind::Sub,
                                       {lhs.expr, rhs.expr}, loc),
                            nullptr};
            } else {
                auto f = std::make_shared<Formula>();
                f->kind = plus ? FormKind::Add : FormKind::Sub;
                f->loc = loc;
                f->kids = {lift(lhs), lift(rhs)};
                lhs = FNode{nullptr, f};
            }
        }
    }
    FNode parse_f_mul() {
        FNode lhs = parse_f_unary();
        for (;;) {
            if (greedy_) return lhs;
            bool star = at(Tok::Star), slash = at(Tok::Slash), mo = at_word("mod");
            if (!star && !slash && !mo) return lhs;
            SourceLoc loc = lex_.next().loc;
            FNode rhs;
            if (star) {
                if (FNode q = try_parse_quantifier(); q.form || q.expr) rhs = q;
                else rhs = parse_f_unary();
            } else {
                rhs = parse_f_unary();
            }
            if (lhs.is_expr() && rhs.is_expr()) {
                ExprKind k = star ? ExprKind::Mul : slash ? ExprKind::Div : ExprKind::Mod;
                lhs = FNode{Expr::make(k, {lhs.expr, rhs.expr}, loc), nullptr};
            } else if (star && lhs.is_expr()) {
                auto f = std::make_shared<Formula>();
                f->kind = FormKind::Scale;
                f->loc = loc;
                f->data = lhs.expr;
                f->kids = {lift(rhs)};
                lhs = FNode{nullptr, f};
            } else {
                throw Error(ErrorKind::Syntax,
                            "only `constant * formula` products are supported", loc);
            }
        }
    }
    FNode parse_f_unary() {
        if (FNode q = try_parse_quantifier(); q.form || q.expr) return q;
        const Token& t = lex_.peek();
        if (t.kind == Tok::Minus) {
            SourceLoc loc = lex_.next().loc;
            FNode v = parse_f_unary();
            if (!v.is_expr())
                throw Error(ErrorKind::Syntax, "cannot negate a formula", loc);
            return FNode{Expr::make(ExprKind::Neg, {v.expr}, loc), nullptr};
        }
        if (t.kind == Tok::Bang) {
            SourceLoc loc = lex_.next().loc;
            FNode v = parse_f_unary();
            if (!v.is_expr())
                throw Error(ErrorKind::Syntax, "`!` applies to data expressions", loc);
            return FNode{Expr::make(ExprKind::Not, {v.expr}, loc), nullptr};
        }
        if (t.kind == Tok::Lt || t.kind == Tok::LBracket) {
            bool diamond = t.kind == Tok::Lt;
            SourceLoc loc = lex_.next().loc;
            ActionPattern pat = parse_pattern();
            expect(diamond ? Tok::Gt : Tok::RBracket, diamond ? "`>`" : "`]`");
            FNode body = parse_f_unary();
            auto f = std::make_shared<Formula>();
            f->kind = diamond ? FormKind::Diamond : FormKind::Box;
            f->loc = loc;
            f->pattern = std::move(pat);
            f->kids = {lift(body)};
            return FNode{nullptr, f};
        }
        return parse_f_postfix();
    }
    ActionPattern parse_pattern() {
        ActionPattern pat;
        pat.loc = lex_.peek().loc;
        if (accept_word("true")) {
            if (accept(Tok::Star)) pat.kind = ActionPattern::AnyStar;
            else pat.kind = ActionPattern::AnyAction;
            return pat;
        }
        std::string name = expect_name("an action pattern");
        pat.kind = ActionPattern::Action;
        pat.action = intern(name);
        if (accept(Tok::LParen)) {
            if (!at(Tok::RParen)) {
                pat.args.push_back(parse_add());  // comparison-free argument level
                while (accept(Tok::Comma)) pat.args.push_back(parse_add());
            }
            expect(Tok::RParen, "`)`");
        }
        return pat;
    }
    FNode parse_f_postfix() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Number) {
            ExprPtr e = Expr::lit_expr(Value(Int(t.text)), t.loc);
            lex_.next();
            return FNode{e, nullptr};
        }
        if (t.kind == Tok::LParen) {
            lex_.next();
            FNode inner = parse_formula_top();
            expect(Tok::RParen, "`)`");
            greedy_ = false;
            return inner;
        }
        if (t.kind == Tok::Ident) {
            if (t.text == "true" || t.text == "false") {
                bool top = t.text == "true";
                SourceLoc loc = lex_.next().loc;
                auto f = std::make_shared<Formula>();
                f->kind = top ? FormKind::Top : FormKind::Bottom;
                f->loc = loc;
                return FNode{nullptr, f};
            }
            if (t.text == "if") {
                return FNode{parse_primary(), nullptr};  // data-level if(...)
            }
            if (is_keyword(t.text)) fail("a formula");
            SourceLoc loc = t.loc;
            std::string name = lex_.peek().text;
            if (in_fix_scope(name)) {
                lex_.next();
                auto f = std::make_shared<Formula>();
                f->kind = FormKind::FixCall;
                f->loc = loc;
                f->fixvar = intern(name);
                if (accept(Tok::LParen)) {
                    if (!at(Tok::RParen)) {
                        f->call_args.push_back(parse_expr());
                        while (accept(Tok::Comma)) f->call_args.push_back(parse_expr());
                    }
                    expect(Tok::RParen, "`)`");
                }
                return FNode{nullptr, f};
            }
            return FNode{parse_postfix(), nullptr};
        }
        fail("a formula");
    }

    FNode try_parse_quantifier() {
        const Token& t = lex_.peek();
        if (t.kind != Tok::Ident) return {};
        if (t.text == "sup" || t.text == "inf" || t.text == "sum") {
            FormKind k = t.text == "sup" ? FormKind::Sup
                         : t.text == "inf" ? FormKind::Inf
                                           : FormKind::SumQ;
            SourceLoc loc = lex_.next().loc;
            auto names = parse_name_list();
            expect(Tok::Colon, "`:`");
            std::string sort = parse_sort_text();
            expect(Tok::Dot, "`.`");
            FNode body = parse_f_or();
            auto f = std::make_shared<Formula>();
            f->kind = k;
            f->loc = loc;
            for (const auto& n : names) f->binders.push_back(intern(n));
            f->binder_sort_name = sort;
            f->kids = {lift(body)};
            greedy_ = true;
            return FNode{nullptr, f};
        }
        if (t.text == "mu" || t.text == "nu") {
            bool is_mu = t.text == "mu";
            SourceLoc loc = lex_.next().loc;
            std::string var = expect_name("a fixpoint variable");
            std::vector<FixParam> params;
            if (accept(Tok::LParen)) {
                for (;;) {
                    FixParam p;
                    p.name = intern(expect_name("a parameter"));
                    expect(Tok::Colon, "`:`");
                    p.sort_name = parse_sort_text();
                    expect(Tok::Assign, "`=`");
                    p.init = parse_expr();
                    params.push_back(std::move(p));
                    if (!accept(Tok::Comma)) break;
                }
                expect(Tok::RParen, "`)`");
            }
            expect(Tok::Dot, "`.`");
            fix_scope_.push_back(var);
            FNode body = parse_f_or();
            fix_scope_.pop_back();
            auto f = std::make_shared<Formula>();
            f->kind = is_mu ? FormKind::Mu : FormKind::Nu;
            f->loc = loc;
            f->fixvar = intern(var);
            f->params = std::move(params);
            f->kids = {lift(body)};
            greedy_ = true;
            return FNode{nullptr, f};
        }
        return {};
    }

    bool in_fix_scope(const std::string& name) const {
        for (const auto& v : fix_scope_)
            if (v == name) return true;
        return false;
    }

    Lexer lex_;
    bool greedy_ = false;
    std::vector<std::string> fix_scope_;
};

}  // namespace

ModelPtr parse_model(const std::string& text, const std::string& name) {
    Parser p(text);
    return p.parse_model_file(name);
}

FormulaSpecPtr parse_formula(const std::string& text, const std::string& name) {
    Parser p(text);
    return p.parse_formula_file(name);
}

ExprPtr parse_expr_text(const std::string& text) {
    Parser p(text);
    return p.parse_expr_only();
}

ProcPtr ProcessTerm::deadlock(SourceLoc loc) {
    auto n = std::make_shared<ProcessTerm>();
    n->kind = ProcKind::Deadlock;
    n->loc = loc;
    return n;
}

ModelPtr Parser::parse_model_file(const std::string& name) {
    auto m = std::make_shared<ModelSpec>();
    m->name = name;
    std::vector<PendingMap> maps;
    std::vector<std::pair<NameId, std::string>> current_vars;
    bool saw_init = false;
    while (!at(Tok::End)) {
        if (accept_word("sort")) {
            parse_sort_section(*m);
        } else if (accept_word("map")) {
            parse_map_section(*m, maps);
        } else if (accept_word("var")) {
            current_vars.clear();
            while (at(Tok::Ident) && !is_keyword(lex_.peek().text)) {
                auto names = parse_name_list();
                expect(Tok::Colon, "`:`");
                std::string sort = parse_sort_text();
                expect(Tok::Semi, "`;`");
                for (const auto& v : names) current_vars.emplace_back(intern(v), sort);
            }
            expect_word("eqn");
            parse_eqn_section(*m, maps, current_vars);
        } else if (accept_word("eqn")) {
            parse_eqn_section(*m, maps, {});
        } else if (accept_word("act")) {
            parse_act_section(*m);
        } else if (accept_word("glob")) {
            parse_glob_section(*m);
        } else if (accept_word("proc")) {
            parse_proc_section(*m);
        } else if (at_word("init")) {
            SourceLoc loc = lex_.next().loc;
            if (saw_init) throw Error(ErrorKind::Syntax, "more than one init", loc);
            saw_init = true;
            m->init_loc = loc;
            m->init = parse_proc();
            expect(Tok::Semi, "`;`");
        } else {
            fail("a section keyword (sort, map, var, eqn, act, glob, proc, init)");
        }
    }
    for (const auto& pm : maps)
        if (!pm.defined)
            throw Error(ErrorKind::Syntax, "map `" + pm.name + "` has no defining equation",
                        pm.loc);
    if (!saw_init)
        throw Error(ErrorKind::Syntax, "specification has no init", SourceLoc{1, 1});
    m->metadata = lex_.directives;
    return m;
}

FormulaSpecPtr Parser::parse_formula_file(const std::string& name) {
    auto spec = std::make_shared<FormulaSpec>();
    spec->name = name;
    FNode root = parse_formula_top();
    if (!at(Tok::End)) fail("end of formula");
    spec->root = lift(root);
    return spec;
}

ExprPtr Parser::parse_expr_only() {
    ExprPtr e = parse_expr();
    if (!at(Tok::End)) fail("end of expression");
    return e;
}

}  // namespace spinspec
