#include "symkit/serialize.hpp"

namespace symkit {

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::RationalConstant: return "Rational";
    case NodeKind::NamedParameter: return "Param";
    case NodeKind::IndepVar: return "Indep";
    case NodeKind::DepVar: return "Dep";
    case NodeKind::JetCoord: return "Jet";
    case NodeKind::UnknownFn: return "Fn";
    case NodeKind::PartialDeriv: return "PartialDeriv";
    case NodeKind::ElemFn: return "Elem";
    case NodeKind::DOperator: return "D";
    case NodeKind::Sum: return "Sum";
    case NodeKind::Product: return "Product";
    case NodeKind::Power: return "Power";
  }
  return "?";
}

}  // namespace

nlohmann::json to_json(const Expr& e) {
  NodeKind k = e.kind();
  nlohmann::json out = nlohmann::json::array({kind_name(k)});
  switch (k) {
    case NodeKind::RationalConstant:
      out.push_back(to_string(*e.as_rational()));
      return out;
    case NodeKind::Sum:
    case NodeKind::Product:
      for (const auto& c : e.children()) out.push_back(to_json(c));
      return out;
    case NodeKind::Power: {
      auto ch = e.children();
      out.push_back(to_json(ch[0]));
      out.push_back(to_string(*ch[1].as_rational()));
      return out;
    }
    default:
      break;
  }
  const Atom a = e.as_atom();
  switch (k) {
    case NodeKind::JetCoord:
      out.push_back(a->name);
      out.push_back(a->index);
      break;
    case NodeKind::UnknownFn:
      out.push_back(a->name);
      out.push_back(a->args);
      break;
    case NodeKind::PartialDeriv:
      out.push_back(nlohmann::json::array({"Fn", a->name, a->args}));
      out.push_back(a->index);
      break;
    case NodeKind::ElemFn:
      out.push_back(elem_name(a->tag));
      out.push_back(to_json(a->inner));
      break;
    default:
      out.push_back(a->name);
      break;
  }
  return out;
}

}  // namespace symkit
