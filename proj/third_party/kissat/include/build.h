#define VERSION "4.0.4"
#define COMPILER "cc"
#define ID 0
#define BUILD "satnn"
#define DIR "third_party/kissat"
