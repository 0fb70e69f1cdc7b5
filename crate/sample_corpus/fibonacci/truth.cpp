#include <iostream>

int main() {
    const int n = 15;
    int f[20];
    f[0] = 0;
    f[1] = 1;
    for (int i = 2; i < n; ++i) {
        f[i] = f[i - 1] + f[i - 2];
    }
    for (int i = 0; i < n; ++i) {
        std::cout << f[i] << "\n";
    }
    return 0;
}
