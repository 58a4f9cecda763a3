//! Cross-entropy values computed offline with 60-digit arithmetic from the
//! literal form `mean(-x[class] + ln Σ exp x)`, frozen here as f64 literals.
//! The expected values keep the extra printed digits.
#![allow(clippy::excessive_precision)]

pub struct Case {
    pub shape: [usize; 2],
    pub logits: &'static [f64],
    pub labels: &'static [usize],
    pub expected: f64,
}

pub const CASES: [Case; 4] = [
    Case {
        shape: [5, 7],
        logits: &[
            2.156700166903864,
            5.4181741681076705,
            -4.823020278099303,
            -7.0031956783559295,
            4.364867323218931,
            7.30007564556681,
            -3.3068671797006655,
            -5.367966934888639,
            3.5599829709925057,
            8.025582819327028,
            -7.514732351231328,
            -9.001256166838447,
            -2.837470509279642,
            -4.0110780771269505,
            2.0346491164241343,
            -6.3664664142170135,
            -9.379639893327415,
            -3.465897291403155,
            -5.301742360017503,
            -3.9780245982168587,
            -1.6985357700882915,
            -5.797833380365205,
            9.475199947102205,
            2.436102283749154,
            4.603536525900996,
            -2.511932341369567,
            8.710204954362183,
            6.795302479284313,
            -5.068336299680734,
            4.217027434075948,
            8.901505730612875,
            1.4284436789848556,
            -2.592604863813608,
            -2.4584707277313544,
            6.679013850974947,
        ],
        labels: &[4, 1, 3, 5, 0],
        expected: 5.6830506224346083246,
    },
    Case {
        shape: [5, 7],
        logits: &[
            0.636421738040513,
            0.331620109852091,
            -0.24771259680036728,
            -0.34202125939391026,
            0.9181336601551078,
            0.39768158672467613,
            -0.1875824874439389,
            -0.8093417038699158,
            -0.16983257360850734,
            0.43404702009751195,
            -0.33768406824067476,
            0.7579059460722342,
            -0.7670183395652561,
            0.20660686760701275,
            0.36800466471090765,
            -0.8754403621310662,
            0.3211458469397588,
            0.3399797423277724,
            0.4274939116170986,
            0.45287997015819315,
            0.40453249526690116,
            0.9502596783852086,
            0.824595511121649,
            -0.33113116268847675,
            0.08399084236310017,
            0.9001968538379075,
            -0.5033591264773065,
            -0.28122475188541296,
            0.5437615890379999,
            0.4524617019852526,
            -0.14813809547070078,
            -0.9088414676301291,
            0.5333450011313763,
            0.8315695811254318,
            0.781777979062388,
        ],
        labels: &[5, 2, 6, 6, 6],
        expected: 1.8944620507634835921,
    },
    Case {
        shape: [3, 4],
        logits: &[
            171.06872169409866,
            -294.07721925816656,
            139.9323751948413,
            -140.83316793171662,
            278.2979545831138,
            -218.95923128739543,
            -156.911574935334,
            269.259579394905,
            -91.0908560205919,
            -19.6091501001261,
            -270.926186093625,
            -127.60580678935636,
        ],
        labels: &[1, 3, 3],
        expected: 194.06036386210025944,
    },
    Case {
        shape: [4, 10],
        logits: &[
            -31.435889613450552,
            -21.495142860273564,
            -44.221070601092585,
            38.33057420243004,
            5.50636120121866,
            46.33318778380067,
            -44.86321232798339,
            -5.464656055457205,
            25.742735567841166,
            29.283462714889637,
            17.373730759399052,
            31.035525404877873,
            -12.476019284538609,
            38.989104639521315,
            -40.21761421559484,
            19.565513944413013,
            -49.73391193074189,
            20.945447827261603,
            -33.28654302890136,
            -17.714531609716566,
            41.732408022718985,
            -9.28188430447291,
            40.935811955289026,
            9.711345922063565,
            -42.5329347351996,
            9.552697329480907,
            -7.448222642859001,
            40.69352096002551,
            -42.05845250039223,
            49.53297752234246,
            -8.642544915627504,
            -2.5208268017489104,
            13.854690432454397,
            -20.134594068830648,
            28.516744259978793,
            -8.490979146759237,
            4.254197450322003,
            34.82995176463247,
            -41.10406348012275,
            -19.609168269338006,
        ],
        labels: &[4, 8, 3, 2],
        expected: 43.475650611160566537,
    },
];
