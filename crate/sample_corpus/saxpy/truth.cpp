#include <iostream>

int main() {
    const int n = 8;
    float x[n], y[n];
    float alpha = 2.0f;
    for (int i = 0; i < n; ++i) {
        x[i] = static_cast<float>(i + 1);
        y[i] = static_cast<float>(n - i - 1);
    }
    // y = alpha*x + y
    for (int i = 0; i < n; ++i) {
        y[i] = alpha * x[i] + y[i];
    }
    for (int i = 0; i < n; ++i) {
        std::cout << y[i] << "\n";
    }
    return 0;
}
