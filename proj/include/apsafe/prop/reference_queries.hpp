#pragma once

#include <string>
#include <vector>

#include "apsafe/prop/dsl.hpp"

namespace apsafe::prop {

/// Eight verification queries against the trained predictor, written in the property
/// language. Timestep subscripts 1..12 in the usual notation are input
/// indices 0..11 here (1 is the oldest sample), and BG_6 is BG_out[5].
/// Under the mixed unit mode the [0,1] ranges and In = 0.006525 stay in
/// network units while BG ranges and the pins In = 5, M = 20 are physical.
struct ReferenceQuery {
    std::string label;
    std::string dsl;

    Property property() const { return parse_dsl(dsl); }
};

inline const std::vector<ReferenceQuery>& reference_queries() {
    static const std::vector<ReferenceQuery> rows{
        {"ML-RQ1.1, BG in [130,180], Delta=20",
         R"(property ML-RQ1.1 {
  box BG_in[*]=[130,180]; In_in[*]=unit_interval; M_in[*]=unit_interval;
  pre: |BG_in[1] - BG_in[0]| <= Delta and |BG_in[2] - BG_in[1]| <= Delta and |BG_in[3] - BG_in[2]| <= Delta and |BG_in[4] - BG_in[3]| <= Delta and |BG_in[5] - BG_in[4]| <= Delta and |BG_in[6] - BG_in[5]| <= Delta and |BG_in[7] - BG_in[6]| <= Delta and |BG_in[8] - BG_in[7]| <= Delta and |BG_in[9] - BG_in[8]| <= Delta and |BG_in[10] - BG_in[9]| <= Delta and |BG_in[11] - BG_in[10]| <= Delta;
  post: |BG_out[1] - BG_out[0]| <= Delta and |BG_out[2] - BG_out[1]| <= Delta and |BG_out[3] - BG_out[2]| <= Delta and |BG_out[4] - BG_out[3]| <= Delta and |BG_out[5] - BG_out[4]| <= Delta;
  thresholds: Delta=20;
  units: mixed;
})"},
        {"ML-RQ1.1, BG in [109,180], Delta=20",
         R"(property ML-RQ1.1 {
  box BG_in[*]=[109,180]; In_in[*]=unit_interval; M_in[*]=unit_interval;
  pre: |BG_in[1] - BG_in[0]| <= Delta and |BG_in[2] - BG_in[1]| <= Delta and |BG_in[3] - BG_in[2]| <= Delta and |BG_in[4] - BG_in[3]| <= Delta and |BG_in[5] - BG_in[4]| <= Delta and |BG_in[6] - BG_in[5]| <= Delta and |BG_in[7] - BG_in[6]| <= Delta and |BG_in[8] - BG_in[7]| <= Delta and |BG_in[9] - BG_in[8]| <= Delta and |BG_in[10] - BG_in[9]| <= Delta and |BG_in[11] - BG_in[10]| <= Delta;
  post: |BG_out[1] - BG_out[0]| <= Delta and |BG_out[2] - BG_out[1]| <= Delta and |BG_out[3] - BG_out[2]| <= Delta and |BG_out[4] - BG_out[3]| <= Delta and |BG_out[5] - BG_out[4]| <= Delta;
  thresholds: Delta=20;
  units: mixed;
})"},
        {"ML-RQ1.8 (In_1=5 => BG_6 <= 230), BG in [212,230]",
         R"(property ML-RQ1.8 {
  box BG_in[*]=[212,230]; In_in[*]=0.006525; In_in[0]=5; M_in[*]=0;
  post: BG_out[5] <= 230;
  units: mixed;
})"},
        {"ML-RQ1.8 (In_12=5 => BG_6 <= 230), BG in [211,220]",
         R"(property ML-RQ1.8 {
  box BG_in[*]=[211,220]; In_in[*]=0.006525; In_in[11]=5; M_in[*]=0;
  post: BG_out[5] <= 230;
  units: mixed;
})"},
        {"ML-RQ1.8 (In_12=5 => BG_6 < 220), BG in [212,222]",
         R"(property ML-RQ1.8 {
  box BG_in[*]=[212,222]; In_in[*]=0.006525; In_in[11]=5; M_in[*]=0;
  post: BG_out[5] < 220;
  units: mixed;
})"},
        {"ML-RQ1.2 (M_12=20 => BG_6 > 210), BG in [180,180]",
         R"(property ML-RQ1.2 {
  box BG_in[*]=[180,180]; In_in[*]=0.006525; M_in[*]=0; M_in[11]=20;
  post: BG_out[5] > 210;
  units: mixed;
})"},
        {"ML-RQ1.2 (M_12=20 => BG_6 > 200), BG in [180,180]",
         R"(property ML-RQ1.2 {
  box BG_in[*]=[180,180]; In_in[*]=0.006525; M_in[*]=0; M_in[11]=20;
  post: BG_out[5] > 200;
  units: mixed;
})"},
        {"ML-RQ1.2 (M_12=20 => BG_6 > 200), BG in [180,183]",
         R"(property ML-RQ1.2 {
  box BG_in[*]=[180,183]; In_in[*]=0.006525; M_in[*]=0; M_in[11]=20;
  post: BG_out[5] > 200;
  units: mixed;
})"},
    };
    return rows;
}

}  // namespace apsafe::prop
